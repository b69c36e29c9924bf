"""Network assembly: the land-structure CNN, scaled-down residual and
inception variants, and classifier-head replacement with freezing.

All convolutions are valid (padding-free). Residual and inception blocks
therefore use only shape-preserving 1x1 convolutions or branches with
equal spatial shrink, so additions and concatenations stay well-formed.
"""
from __future__ import annotations

import copy

import numpy as np

from .layers import (Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU,
                     SoftmaxCrossEntropy)
from .tensor import Tensor


class BuildError(ValueError):
    """Raised when a layer sequence cannot be assembled for an input shape."""


class Network:
    """Ordered layer sequence ending in a softmax cross-entropy head.

    Shape compatibility is checked at build time by propagating the input
    shape through every layer; the resulting chain is kept for reporting.
    """

    def __init__(self, layers, input_shape, num_classes):
        if not layers or not isinstance(layers[-1], SoftmaxCrossEntropy):
            raise BuildError("network must end in a softmax_ce layer")
        if layers[-1].num_classes != num_classes:
            raise BuildError(
                f"softmax head has width {layers[-1].num_classes}, "
                f"expected {num_classes} classes")
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes
        self.shape_chain = self._propagate()

    def _propagate(self):
        shape = self.input_shape
        chain = [("input", shape)]
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.out_shape(shape)
            except ValueError as err:
                raise BuildError(f"layer {i} ({layer.kind}): {err}") from err
            chain.append((layer.kind, shape))
        return chain

    # -- execution -----------------------------------------------------

    def logits(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = layer.forward(x)
        return x

    def forward(self, x: Tensor, target: int):
        """Full pass; returns (loss, probs) and caches state for backward."""
        return self.layers[-1].forward(self.logits(x), target)

    def backward(self) -> Tensor:
        grad = self.layers[-1].backward()
        for layer in reversed(self.layers[:-1]):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: Tensor):
        """Class id (argmax of probs; lowest index wins ties) and probs."""
        p = SoftmaxCrossEntropy.probs(self.logits(x))
        return int(np.argmax(p.data)), p

    # -- parameters ----------------------------------------------------

    def param_slots(self):
        slots = []
        for i, layer in enumerate(self.layers):
            slots.extend(layer.param_slots(f"layers.{i}."))
        return slots

    def num_params(self, trainable_only=True):
        return sum(layer.params[key].size
                   for _, layer, key in self.param_slots()
                   if layer.trainable or not trainable_only)

    def state_dict(self):
        return {name: layer.params[key].data.copy()
                for name, layer, key in self.param_slots()}

    def load_state(self, state):
        for name, layer, key in self.param_slots():
            src = state[name]
            dst = layer.params[key].data
            if src.shape != dst.shape:
                raise ValueError(f"{name}: shape {src.shape} != {dst.shape}")
            np.copyto(dst, src)

    def astype(self, dtype):
        """Deep copy with every parameter cast to the given precision."""
        net = copy.deepcopy(self)
        for _, layer, key in net.param_slots():
            layer.params[key] = layer.params[key].astype(dtype)
        return net

    def config(self):
        return {"input_shape": list(self.input_shape),
                "num_classes": self.num_classes,
                "layers": [dict(layer.config(), trainable=layer.trainable)
                           for layer in self.layers]}


class ResidualBlock(Layer):
    """out = F(x) + shortcut(x) with F = conv1x1 -> relu -> conv1x1 and an
    identity shortcut (1x1 projection when the channel count changes and
    the projection flag is set)."""
    kind = "residual"

    def __init__(self, in_channels, channels, projection=False, rng=None, dtype="f32"):
        super().__init__()
        if channels != in_channels and not projection:
            raise BuildError(
                f"residual block changes channels {in_channels}->{channels} "
                "without a projection shortcut")
        self.in_channels = in_channels
        self.channels = channels
        self.projection = projection
        self.f1 = Conv2D(in_channels, channels, kernel=1, rng=rng, dtype=dtype)
        self.act = ReLU()
        self.f2 = Conv2D(channels, channels, kernel=1, rng=rng, dtype=dtype)
        self.proj = (Conv2D(in_channels, channels, kernel=1, rng=rng, dtype=dtype)
                     if projection else None)

    def sublayers(self):
        return [s for s in (self.f1, self.act, self.f2, self.proj) if s is not None]

    def forward(self, x):
        fx = self.f2.forward(self.act.forward(self.f1.forward(x)))
        sc = self.proj.forward(x) if self.proj is not None else x
        self.cache = x.shape
        return Tensor.wrap(fx.data + sc.data)

    def backward(self, grad_out):
        self._require_cache()
        self._check_grad_shape(grad_out, self.out_shape(self.cache))
        d_f = self.f1.backward(self.act.backward(self.f2.backward(grad_out)))
        d_sc = self.proj.backward(grad_out) if self.proj is not None else grad_out
        return Tensor.wrap(d_f.data + d_sc.data)

    def out_shape(self, in_shape):
        f_shape = self.f2.out_shape(self.act.out_shape(self.f1.out_shape(in_shape)))
        sc_shape = self.proj.out_shape(in_shape) if self.proj is not None else in_shape
        if f_shape != sc_shape:
            raise ValueError(
                f"residual paths disagree: {f_shape} vs {sc_shape}")
        return f_shape

    def config(self):
        return {"kind": self.kind, "in_channels": self.in_channels,
                "channels": self.channels, "projection": self.projection}


# Branch ops for inception blocks: ("conv", kernel, out_channels) or
# ("pool", size) — pooling inside a branch is stride 1 so only the window
# size shrinks the map.
def _build_branch(in_channels, ops, rng, dtype):
    layers = []
    channels = in_channels
    for op in ops:
        if op[0] == "conv":
            _, kernel, out_ch = op
            layers.append(Conv2D(channels, out_ch, kernel=kernel, rng=rng, dtype=dtype))
            channels = out_ch
        elif op[0] == "pool":
            layers.append(MaxPool2D(pool=op[1], stride=1))
        else:
            raise BuildError(f"unknown branch op {op[0]!r}")
    return layers, channels


def _branch_shrink(ops):
    # conv kernels and stride-1 pool windows both shrink the map by size-1
    return sum(op[1] - 1 for op in ops)


class InceptionBlock(Layer):
    """Parallel branches over the same input, concatenated along channels.

    Every branch must shrink the spatial map by the same amount (valid
    convolutions and stride-1 pools only), checked at construction.
    """
    kind = "inception"

    def __init__(self, in_channels, branches, rng=None, dtype="f32"):
        super().__init__()
        if not branches:
            raise BuildError("inception block needs at least one branch")
        shrinks = [_branch_shrink(ops) for ops in branches]
        if len(set(shrinks)) > 1:
            raise BuildError(
                f"inception branches disagree on spatial shrink: {shrinks}")
        self.in_channels = in_channels
        self.branch_spec = [list(map(list, ops)) for ops in branches]
        self.branches = []
        self.branch_channels = []
        for ops in branches:
            layers, out_ch = _build_branch(in_channels, ops, rng, dtype)
            self.branches.append(layers)
            self.branch_channels.append(out_ch)

    def sublayers(self):
        return [layer for branch in self.branches for layer in branch]

    def forward(self, x):
        outs = []
        for branch in self.branches:
            y = x
            for layer in branch:
                y = layer.forward(y)
            outs.append(y.data)
        self.cache = x.shape
        return Tensor.wrap(np.concatenate(outs, axis=2))

    def backward(self, grad_out):
        self._require_cache()
        self._check_grad_shape(grad_out, self.out_shape(self.cache))
        dx = None
        offset = 0
        for branch, width in zip(self.branches, self.branch_channels):
            g = Tensor.wrap(
                np.ascontiguousarray(grad_out.data[:, :, offset:offset + width]))
            offset += width
            for layer in reversed(branch):
                g = layer.backward(g)
            dx = g.data if dx is None else dx + g.data
        return Tensor.wrap(dx)

    def out_shape(self, in_shape):
        shapes = []
        for branch in self.branches:
            shape = in_shape
            for layer in branch:
                shape = layer.out_shape(shape)
            shapes.append(shape)
        hw = {s[:2] for s in shapes}
        if len(hw) > 1:
            raise ValueError(f"inception branches disagree on HxW: {sorted(hw)}")
        return shapes[0][:2] + (sum(s[2] for s in shapes),)

    def config(self):
        return {"kind": self.kind, "in_channels": self.in_channels,
                "branches": self.branch_spec}


def build_cnn(input_shape, num_classes, rng, dtype="f32"):
    """Three conv/relu/pool stages (32, 64, 128 filters of 3x3, 2x2 pools),
    then flatten -> dense-64 -> relu -> dense-K -> softmax."""
    h, w, c = input_shape
    layers = []
    channels = c
    for filters in (32, 64, 128):
        layers.append(Conv2D(channels, filters, kernel=3, rng=rng, dtype=dtype))
        layers.append(ReLU())
        layers.append(MaxPool2D(pool=2))
        channels = filters
    layers.append(Flatten())
    shape = input_shape
    for layer in layers:
        try:
            shape = layer.out_shape(shape)
        except ValueError as err:
            raise BuildError(f"input {input_shape} too small: {err}") from err
    layers.append(Dense(shape[0], 64, rng=rng, dtype=dtype))
    layers.append(ReLU())
    layers.append(Dense(64, num_classes, rng=rng, dtype=dtype))
    layers.append(SoftmaxCrossEntropy(num_classes))
    return Network(layers, input_shape, num_classes)


def build_mini_resnet(stages, input_shape, num_classes, rng, dtype="f32"):
    """Residual blocks (one per stage channel count) followed by
    flatten -> dense-K -> softmax. Channel changes get 1x1 projections."""
    if not stages:
        raise BuildError("mini-resnet needs at least one stage")
    h, w, c = input_shape
    layers = []
    channels = c
    for out_ch in stages:
        layers.append(ResidualBlock(channels, out_ch,
                                    projection=(out_ch != channels),
                                    rng=rng, dtype=dtype))
        channels = out_ch
    layers.append(Flatten())
    layers.append(Dense(h * w * channels, num_classes, rng=rng, dtype=dtype))
    layers.append(SoftmaxCrossEntropy(num_classes))
    return Network(layers, input_shape, num_classes)


def standard_inception_branches(c_reduced, c_direct, c_pool, reduce_to=None):
    """The three classic branch flavors with equal spatial shrink:
    1x1 reduce then 3x3 conv, direct 3x3 conv, and 3x3 stride-1 pool
    followed by a 1x1 projection."""
    r = max(c_reduced // 2, 1) if reduce_to is None else reduce_to
    return [
        [("conv", 1, r), ("conv", 3, c_reduced)],
        [("conv", 3, c_direct)],
        [("pool", 3), ("conv", 1, c_pool)],
    ]


def build_mini_inception(blocks, input_shape, num_classes, rng, dtype="f32"):
    """Inception blocks (each a list of branch op lists) followed by
    flatten -> dense-K -> softmax."""
    if not blocks:
        raise BuildError("mini-inception needs at least one block")
    layers = []
    shape = tuple(input_shape)
    for branches in blocks:
        block = InceptionBlock(shape[2], branches, rng=rng, dtype=dtype)
        layers.append(block)
        shape = block.out_shape(shape)
    layers.append(Flatten())
    layers.append(Dense(shape[0] * shape[1] * shape[2], num_classes,
                        rng=rng, dtype=dtype))
    layers.append(SoftmaxCrossEntropy(num_classes))
    return Network(layers, input_shape, num_classes)


def replace_head(net: Network, new_num_classes, freeze_below, rng) -> Network:
    """Swap the final dense layer for a fresh Glorot-initialized one with
    new_num_classes outputs; optionally freeze everything below it. All
    non-head parameter values are copied bitwise."""
    if len(net.layers) < 2 or not isinstance(net.layers[-2], Dense):
        raise ValueError("network does not end in a dense head")
    dtype = net.layers[-2].params["W"].dtype
    body = [copy.deepcopy(layer) for layer in net.layers[:-2]]
    for layer in body:
        layer.cache = None
        if freeze_below:
            layer.trainable = False
            for sub in layer.sublayers():
                sub.trainable = False
    head = Dense(net.layers[-2].n_in, new_num_classes, rng=rng, dtype=dtype)
    new_layers = body + [head, SoftmaxCrossEntropy(new_num_classes)]
    return Network(new_layers, net.input_shape, new_num_classes)


def iter_all_layers(net: Network):
    """Depth-first walk over layers including composite sublayers."""
    stack = list(net.layers)
    while stack:
        layer = stack.pop(0)
        yield layer
        stack = list(layer.sublayers()) + stack
