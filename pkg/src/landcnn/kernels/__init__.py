"""Kernel backend selection.

The compiled Cython backend is used when available; the pure-numpy
reference backend is the fallback. Both produce bitwise-identical
results (see benchmarks/bench_kernels.py for the speed comparison).
Set LANDCNN_KERNELS=numpy|compiled to force a backend.
"""
import os

import numpy as np

from . import _ref

_choice = os.environ.get("LANDCNN_KERNELS", "auto")
if _choice not in ("auto", "compiled", "numpy"):
    raise ValueError(f"LANDCNN_KERNELS must be auto|compiled|numpy, got {_choice!r}")

if _choice == "numpy":
    _impl = _ref
    BACKEND = "numpy"
else:
    try:
        from . import _fast as _impl
        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _ref
        BACKEND = "numpy"

_FLOAT_DTYPES = (np.float32, np.float64)


def _check_float(arr, name):
    if arr.dtype.type not in _FLOAT_DTYPES:
        raise TypeError(f"{name} must be float32 or float64, got {arr.dtype}")
    return np.ascontiguousarray(arr)


def matmul(a, b):
    """Matrix product of (m,k) by (k,n), ascending-k accumulation order."""
    a = _check_float(a, "a")
    b = _check_float(b, "b")
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    if a.dtype != b.dtype:
        raise TypeError(f"matmul operand dtypes differ: {a.dtype} vs {b.dtype}")
    return _impl.matmul(a, b)


def conv_out_size(size, kernel, stride):
    return (size - kernel) // stride + 1


def _check_window(h, w, kh, kw, stride):
    if kh > h or kw > w:
        raise ValueError(f"window {kh}x{kw} does not fit input {h}x{w}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")


def im2col(x, kh, kw, stride=1):
    """Unroll receptive fields of an (H,W,C) array into patch rows.

    Row r holds the patch for output position r (row-major over the
    output grid); within a row the layout is row-major over
    (kernel row, kernel col, channel).
    """
    x = _check_float(x, "x")
    if x.ndim != 3:
        raise ValueError(f"im2col needs an (H,W,C) input, got shape {x.shape}")
    _check_window(x.shape[0], x.shape[1], kh, kw, stride)
    return _impl.im2col(x, kh, kw, stride)


def col2im(cols, h, w, c, kh, kw, stride=1):
    """Adjoint of im2col: scatter patch rows back additively."""
    cols = _check_float(cols, "cols")
    _check_window(h, w, kh, kw, stride)
    ho = conv_out_size(h, kh, stride)
    wo = conv_out_size(w, kw, stride)
    if cols.shape != (ho * wo, kh * kw * c):
        raise ValueError(
            f"col2im expects shape {(ho * wo, kh * kw * c)}, got {cols.shape}")
    return _impl.col2im(cols, h, w, c, kh, kw, stride)


def maxpool(x, pool=2, stride=2):
    """Window maximum; returns (out, switches) with switches holding the
    flat row-major window index of each first-encountered maximum."""
    x = _check_float(x, "x")
    if x.ndim != 3:
        raise ValueError(f"maxpool needs an (H,W,C) input, got shape {x.shape}")
    _check_window(x.shape[0], x.shape[1], pool, pool, stride)
    return _impl.maxpool(x, pool, stride)


def maxpool_grad(gout, sw, h, w, pool=2, stride=2):
    """Route upstream gradients back to the recorded argmax positions."""
    gout = _check_float(gout, "gout")
    sw = np.ascontiguousarray(sw, dtype=np.int64)
    if gout.shape != sw.shape:
        raise ValueError(f"gradient shape {gout.shape} != switches shape {sw.shape}")
    expected = (conv_out_size(h, pool, stride), conv_out_size(w, pool, stride))
    if gout.ndim != 3 or gout.shape[:2] != expected:
        raise ValueError(
            f"gradient shape {gout.shape} does not match pooled {h}x{w} "
            f"input (expected {expected} spatial)")
    if sw.size and (sw.min() < 0 or sw.max() >= pool * pool):
        raise ValueError(f"switch indices outside [0, {pool * pool})")
    return _impl.maxpool_grad(gout, sw, h, w, pool, stride)
