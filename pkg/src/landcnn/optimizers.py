"""First-order optimizers: SGD (no momentum), Adam, RMSProp.

All three share a uniform step interface over a network's parameter
slots. Per-parameter state (moments / squared accumulators) is created
lazily with the parameter's shape and dtype; frozen parameters are
skipped entirely, so their values stay bitwise unchanged.
"""
import numpy as np


class Optimizer:
    kind = "base"

    def __init__(self, lr):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.lr = lr
        self.t = 0

    def step(self, net):
        """Apply one global update to every trainable parameter in place."""
        self.t += 1
        for name, layer, key in net.param_slots():
            if not layer.trainable:
                continue
            param = layer.params[key].data
            grad = layer.grads[key].data
            if grad.shape != param.shape:
                raise ValueError(
                    f"{name}: gradient shape {grad.shape} != parameter "
                    f"shape {param.shape}")
            self._update(name, param, grad)

    def _update(self, name, param, grad):
        raise NotImplementedError

    def _slot(self, store, name, param):
        slot = store.get(name)
        if slot is None or slot.shape != param.shape or slot.dtype != param.dtype:
            slot = np.zeros_like(param)
            store[name] = slot
        return slot


class SGD(Optimizer):
    kind = "sgd"

    def _update(self, name, param, grad):
        param -= self.lr * grad


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}

    def _update(self, name, param, grad):
        m = self._slot(self.m, name, param)
        v = self._slot(self.v, name, param)
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * (grad * grad)
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RMSProp(Optimizer):
    kind = "rmsprop"

    def __init__(self, lr, rho=0.9, eps=1e-8):
        super().__init__(lr)
        self.rho = rho
        self.eps = eps
        self.v = {}

    def _update(self, name, param, grad):
        v = self._slot(self.v, name, param)
        v *= self.rho
        v += (1.0 - self.rho) * (grad * grad)
        param -= self.lr * grad / (np.sqrt(v) + self.eps)


OPTIMIZERS = {"sgd": SGD, "adam": Adam, "rmsprop": RMSProp}


def make_optimizer(kind, lr):
    try:
        cls = OPTIMIZERS[kind]
    except KeyError:
        raise ValueError(
            f"unknown optimizer {kind!r}; choose from {sorted(OPTIMIZERS)}") from None
    return cls(lr)
