"""Binary network checkpoints.

Layout (all integers little-endian):
  magic "LNCK" | version u16 | descriptor u32 length + UTF-8 JSON |
  tensor count u32 | per tensor: name (u32 length + UTF-8), rank u8,
  dims rank*u32, precision tag u8 (4 = float32, 8 = float64), raw
  IEEE-754 little-endian values.

The descriptor is the network's architecture config, so loading rebuilds
the exact layer structure and then restores every parameter bitwise.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .architectures import InceptionBlock, Network, ResidualBlock
from .layers import (Conv2D, Dense, Flatten, MaxPool2D, ReLU,
                     SoftmaxCrossEntropy)
from .tensor import Tensor

MAGIC = b"LNCK"
VERSION = 1
_TAGS = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class CheckpointError(Exception):
    pass


def _layer_from_config(cfg):
    kind = cfg["kind"]
    if kind == "conv2d":
        layer = Conv2D(cfg["in_channels"], cfg["filters"],
                       kernel=cfg["kernel"], stride=cfg["stride"])
    elif kind == "maxpool2d":
        layer = MaxPool2D(pool=cfg["pool"], stride=cfg["stride"])
    elif kind == "flatten":
        layer = Flatten()
    elif kind == "dense":
        layer = Dense(cfg["n_in"], cfg["n_out"])
    elif kind == "relu":
        layer = ReLU()
    elif kind == "softmax_ce":
        layer = SoftmaxCrossEntropy(cfg["num_classes"])
    elif kind == "residual":
        layer = ResidualBlock(cfg["in_channels"], cfg["channels"],
                              projection=cfg["projection"])
    elif kind == "inception":
        branches = [[tuple(op) for op in ops] for ops in cfg["branches"]]
        layer = InceptionBlock(cfg["in_channels"], branches)
    else:
        raise CheckpointError(f"unknown layer kind {kind!r} in descriptor")
    trainable = cfg.get("trainable", True)
    layer.trainable = trainable
    for sub in layer.sublayers():
        sub.trainable = trainable
    return layer


def save_checkpoint(net: Network, path):
    slots = net.param_slots()
    descriptor = json.dumps(net.config(), sort_keys=True).encode("utf-8")
    parts = [struct.pack("<4sH", MAGIC, VERSION),
             struct.pack("<I", len(descriptor)), descriptor,
             struct.pack("<I", len(slots))]
    for name, layer, key in slots:
        tensor = layer.params[key]
        name_bytes = name.encode("utf-8")
        tag = 4 if tensor.dtype == "f32" else 8
        parts.append(struct.pack("<I", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<B", len(tensor.shape)))
        parts.append(struct.pack(f"<{len(tensor.shape)}I", *tensor.shape))
        parts.append(struct.pack("<B", tag))
        parts.append(tensor.data.astype(_TAGS[tag], copy=False).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.off = 0

    def take(self, n, what):
        if self.off + n > len(self.buf):
            raise CheckpointError(
                f"truncated checkpoint: needed {n} bytes for {what} "
                f"at byte offset {self.off}, file has {len(self.buf)}")
        chunk = self.buf[self.off:self.off + n]
        self.off += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_checkpoint(path) -> Network:
    try:
        with open(path, "rb") as fh:
            reader = _Reader(fh.read())
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err}") from err
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(
            f"bad magic {magic!r} at byte offset 0, expected {MAGIC!r}")
    (version,) = reader.unpack("<H", "version")
    if version != VERSION:
        raise CheckpointError(
            f"unsupported version {version} at byte offset 4")
    (desc_len,) = reader.unpack("<I", "descriptor length")
    try:
        config = json.loads(reader.take(desc_len, "descriptor").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise CheckpointError(f"unreadable architecture descriptor: {err}") from err

    layers = [_layer_from_config(c) for c in config["layers"]]
    net = Network(layers, tuple(config["input_shape"]), config["num_classes"])

    (count,) = reader.unpack("<I", "tensor count")
    tensors = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I", "tensor name length")
        name = reader.take(name_len, "tensor name").decode("utf-8")
        (rank,) = reader.unpack("<B", f"rank of {name}")
        dims = reader.unpack(f"<{rank}I", f"dims of {name}")
        (tag,) = reader.unpack("<B", f"precision tag of {name}")
        if tag not in _TAGS:
            raise CheckpointError(
                f"unknown precision tag {tag} for {name} "
                f"at byte offset {reader.off - 1}")
        n_values = int(np.prod(dims)) if rank else 1
        raw = reader.take(n_values * tag, f"values of {name}")
        tensors[name] = np.frombuffer(raw, dtype=_TAGS[tag]).reshape(dims).copy()

    slots = net.param_slots()
    expected = {name for name, _, _ in slots}
    if expected != set(tensors):
        missing = sorted(expected - set(tensors))
        extra = sorted(set(tensors) - expected)
        raise CheckpointError(
            f"tensor names do not match descriptor (missing {missing}, "
            f"unexpected {extra})")
    for name, layer, key in slots:
        stored = tensors[name]
        if stored.shape != layer.params[key].shape:
            raise CheckpointError(
                f"{name}: stored shape {stored.shape} != "
                f"architecture shape {layer.params[key].shape}")
        layer.params[key] = Tensor.wrap(stored)
    return net
