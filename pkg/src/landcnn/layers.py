"""Differentiable layers: convolution, max pooling, flatten, dense, ReLU,
softmax-with-cross-entropy.

Each layer keeps its parameters and gradients in named Tensor slots and
caches forward state for the matching backward call. Convolution is
lowered to im2col + matmul so it reuses the fixed-order matrix kernel.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .tensor import DTYPES, Tensor


def glorot_uniform(fan_in, fan_out, shape, rng, dtype="f32"):
    """Xavier/Glorot uniform sampler: i.i.d. U[-a, a] with
    a = sqrt(6 / (fan_in + fan_out))."""
    a = math.sqrt(6.0 / (fan_in + fan_out))
    values = rng.uniform(-a, a, size=shape)
    return Tensor.wrap(values.astype(DTYPES[dtype]))


class Layer:
    kind = "base"

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.cache = None
        self.trainable = True

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def backward(self, grad_out: Tensor) -> Tensor:
        raise NotImplementedError

    def out_shape(self, in_shape):
        raise NotImplementedError

    def config(self):
        return {"kind": self.kind}

    def sublayers(self):
        return ()

    def param_slots(self, prefix=""):
        """Yield (name, layer, key) for every parameter, composites included."""
        for key in self.params:
            yield prefix + key, self, key
        for i, sub in enumerate(self.sublayers()):
            yield from sub.param_slots(f"{prefix}{i}.")

    def _require_cache(self):
        if self.cache is None:
            raise RuntimeError(f"{self.kind}: backward called before forward")

    def _check_grad_shape(self, grad_out, expected):
        if grad_out.shape != expected:
            raise ValueError(
                f"{self.kind}: upstream gradient shape {grad_out.shape} "
                f"!= forward output shape {expected}")


class Conv2D(Layer):
    """Valid (padding-free) convolution, stride 1 by default.

    Weights are (filters, kh, kw, in_channels); flattened per filter they
    match the im2col patch layout, so forward is one matrix product.
    """
    kind = "conv2d"

    def __init__(self, in_channels, filters, kernel=3, stride=1, rng=None, dtype="f32"):
        super().__init__()
        self.in_channels = in_channels
        self.filters = filters
        self.kernel = kernel
        self.stride = stride
        shape = (filters, kernel, kernel, in_channels)
        if rng is None:
            self.params["W"] = Tensor.zeros(shape, dtype)
        else:
            fan_in = kernel * kernel * in_channels
            fan_out = kernel * kernel * filters
            self.params["W"] = glorot_uniform(fan_in, fan_out, shape, rng, dtype)
        self.params["b"] = Tensor.zeros((filters,), dtype)

    def forward(self, x):
        h, w, c = x.shape
        if c != self.in_channels:
            raise ValueError(
                f"conv2d expects {self.in_channels} input channels, got {c}")
        cols = kernels.im2col(x.data, self.kernel, self.kernel, self.stride)
        w2 = self.params["W"].data.reshape(self.filters, -1)
        out2 = kernels.matmul(cols, np.ascontiguousarray(w2.T))
        out2 += self.params["b"].data
        ho = kernels.conv_out_size(h, self.kernel, self.stride)
        wo = kernels.conv_out_size(w, self.kernel, self.stride)
        self.cache = ((h, w, c), cols)
        return Tensor.wrap(out2.reshape(ho, wo, self.filters))

    def backward(self, grad_out):
        self._require_cache()
        (h, w, c), cols = self.cache
        ho = kernels.conv_out_size(h, self.kernel, self.stride)
        wo = kernels.conv_out_size(w, self.kernel, self.stride)
        self._check_grad_shape(grad_out, (ho, wo, self.filters))
        g2 = grad_out.data.reshape(-1, self.filters)
        w2 = self.params["W"].data.reshape(self.filters, -1)
        dw2 = kernels.matmul(np.ascontiguousarray(g2.T), cols)
        dcols = kernels.matmul(g2, w2)
        dx = kernels.col2im(dcols, h, w, c, self.kernel, self.kernel, self.stride)
        self.grads["W"] = Tensor.wrap(dw2.reshape(self.params["W"].shape))
        self.grads["b"] = Tensor.wrap(g2.sum(axis=0))
        return Tensor.wrap(dx)

    def out_shape(self, in_shape):
        h, w, c = in_shape
        if c != self.in_channels:
            raise ValueError(
                f"conv2d expects {self.in_channels} input channels, got {c}")
        if self.kernel > h or self.kernel > w:
            raise ValueError(f"conv2d kernel {self.kernel} does not fit input {h}x{w}")
        return (kernels.conv_out_size(h, self.kernel, self.stride),
                kernels.conv_out_size(w, self.kernel, self.stride),
                self.filters)

    def config(self):
        return {"kind": self.kind, "in_channels": self.in_channels,
                "filters": self.filters, "kernel": self.kernel,
                "stride": self.stride}


class MaxPool2D(Layer):
    """Window maximum with floor semantics: odd trailing rows/columns are
    dropped. Ties route to the first window position in row-major order."""
    kind = "maxpool2d"

    def __init__(self, pool=2, stride=None):
        super().__init__()
        self.pool = pool
        self.stride = pool if stride is None else stride
        self.trainable = False

    def forward(self, x):
        out, sw = kernels.maxpool(x.data, self.pool, self.stride)
        self.cache = (x.shape, sw)
        return Tensor.wrap(out)

    def backward(self, grad_out):
        self._require_cache()
        (h, w, c), sw = self.cache
        self._check_grad_shape(grad_out, sw.shape)
        return Tensor.wrap(
            kernels.maxpool_grad(grad_out.data, sw, h, w, self.pool, self.stride))

    def out_shape(self, in_shape):
        h, w, c = in_shape
        if self.pool > h or self.pool > w:
            raise ValueError(f"pool window {self.pool} does not fit input {h}x{w}")
        return (kernels.conv_out_size(h, self.pool, self.stride),
                kernels.conv_out_size(w, self.pool, self.stride), c)

    def config(self):
        return {"kind": self.kind, "pool": self.pool, "stride": self.stride}


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        super().__init__()
        self.trainable = False

    def forward(self, x):
        self.cache = x.shape
        return x.reshape((x.size,))

    def backward(self, grad_out):
        self._require_cache()
        self._check_grad_shape(grad_out, (math.prod(self.cache),))
        return grad_out.reshape(self.cache)

    def out_shape(self, in_shape):
        return (math.prod(in_shape),)


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in, n_out, rng=None, dtype="f32"):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        if rng is None:
            self.params["W"] = Tensor.zeros((n_in, n_out), dtype)
        else:
            self.params["W"] = glorot_uniform(n_in, n_out, (n_in, n_out), rng, dtype)
        self.params["b"] = Tensor.zeros((n_out,), dtype)

    def forward(self, x):
        if x.shape != (self.n_in,):
            raise ValueError(f"dense expects length {self.n_in}, got shape {x.shape}")
        out = kernels.matmul(x.data.reshape(1, -1), self.params["W"].data)[0]
        out += self.params["b"].data
        self.cache = x.data
        return Tensor.wrap(out)

    def backward(self, grad_out):
        self._require_cache()
        self._check_grad_shape(grad_out, (self.n_out,))
        x = self.cache
        g = grad_out.data
        self.grads["W"] = Tensor.wrap(
            kernels.matmul(x.reshape(-1, 1), g.reshape(1, -1)))
        self.grads["b"] = Tensor.wrap(g.copy())
        dx = kernels.matmul(self.params["W"].data, g.reshape(-1, 1))[:, 0]
        return Tensor.wrap(dx)

    def out_shape(self, in_shape):
        if in_shape != (self.n_in,):
            raise ValueError(f"dense expects length {self.n_in}, got shape {in_shape}")
        return (self.n_out,)

    def config(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out}


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        super().__init__()
        self.trainable = False

    def forward(self, x):
        self.cache = x.data > 0  # subgradient at exactly 0 is 0
        return Tensor.wrap(np.maximum(x.data, 0))

    def backward(self, grad_out):
        self._require_cache()
        self._check_grad_shape(grad_out, self.cache.shape)
        return Tensor.wrap(grad_out.data * self.cache)

    def out_shape(self, in_shape):
        return in_shape


class SoftmaxCrossEntropy(Layer):
    """Softmax over K logits combined with cross-entropy loss against an
    integer class id. Loss is evaluated in log-sum-exp form so confident
    mistakes stay finite."""
    kind = "softmax_ce"

    def __init__(self, num_classes):
        super().__init__()
        self.num_classes = num_classes
        self.trainable = False

    @staticmethod
    def probs(logits: Tensor) -> Tensor:
        z = logits.data
        shifted = z - z.max()
        e = np.exp(shifted)
        return Tensor.wrap(e / e.sum())

    def forward(self, logits: Tensor, target: int):
        if logits.shape != (self.num_classes,):
            raise ValueError(
                f"expected {self.num_classes} logits, got shape {logits.shape}")
        if not 0 <= target < self.num_classes:
            raise ValueError(
                f"target {target} out of range for {self.num_classes} classes")
        z = logits.data
        shifted = z - z.max()
        e = np.exp(shifted)
        total = e.sum()
        loss = float(np.log(total) - shifted[target])
        p = Tensor.wrap(e / total)
        self.cache = (p.data, target)
        return loss, p

    def backward(self, grad_out=None):
        self._require_cache()
        p, target = self.cache
        g = p.copy()
        g[target] -= 1.0
        return Tensor.wrap(g)

    def out_shape(self, in_shape):
        if in_shape != (self.num_classes,):
            raise ValueError(
                f"softmax_ce expects {self.num_classes} logits, got shape {in_shape}")
        return in_shape

    def config(self):
        return {"kind": self.kind, "num_classes": self.num_classes}
