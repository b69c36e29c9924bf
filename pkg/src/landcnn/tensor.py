"""Dense n-dimensional tensor: the carrier of activations, weights and
gradients.

Data is a row-major (C-contiguous) numpy array in one of two precisions:
float32 is the training default, float64 is used for gradient checking.
All arithmetic goes through the fixed-order kernels in landcnn.kernels,
so results are bitwise reproducible under a seed.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels

DTYPES = {"f32": np.float32, "f64": np.float64}
DEFAULT_DTYPE = "f32"


def _resolve_dtype(dtype):
    if dtype in DTYPES:
        return DTYPES[dtype]
    npdt = np.dtype(dtype)
    if npdt.type not in (np.float32, np.float64):
        raise TypeError(f"unsupported dtype {dtype!r}; use 'f32' or 'f64'")
    return npdt.type


class Tensor:
    """Immutable-shape dense array. Construct with a scalar fill or a flat
    row-major value sequence whose length matches the shape."""

    __slots__ = ("data",)

    def __init__(self, shape, fill=0.0, dtype=DEFAULT_DTYPE):
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape):
            raise ValueError(f"all extents must be >= 1, got shape {shape}")
        npdt = _resolve_dtype(dtype)
        n = math.prod(shape)
        if np.isscalar(fill):
            self.data = np.full(shape, fill, dtype=npdt)
        else:
            values = np.asarray(fill, dtype=npdt).ravel()
            if values.size != n:
                raise ValueError(
                    f"value sequence has length {values.size}, "
                    f"shape {shape} needs {n}")
            self.data = values.reshape(shape).copy()

    @classmethod
    def wrap(cls, arr):
        """Adopt a numpy array (contiguous float32/float64) without copying
        when possible."""
        arr = np.asarray(arr)
        if arr.dtype.type not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        arr = np.ascontiguousarray(arr)
        t = cls.__new__(cls)
        t.data = arr
        return t

    @classmethod
    def zeros(cls, shape, dtype=DEFAULT_DTYPE):
        return cls(shape, 0.0, dtype)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return "f32" if self.data.dtype == np.float32 else "f64"

    def reshape(self, shape):
        """New view with the same data; total length must be unchanged."""
        shape = tuple(int(s) for s in shape)
        if math.prod(shape) != self.size:
            raise ValueError(
                f"cannot reshape {self.size} values into shape {shape}")
        return Tensor.wrap(self.data.reshape(shape))

    def astype(self, dtype):
        return Tensor.wrap(self.data.astype(_resolve_dtype(dtype)))

    def copy(self):
        return Tensor.wrap(self.data.copy())

    def tolist(self):
        return self.data.tolist()

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(m,k) x (k,n) matrix product with fixed ascending-k accumulation."""
    return Tensor.wrap(kernels.matmul(a.data, b.data))


def im2col(x: Tensor, kernel_h: int, kernel_w: int, stride: int = 1) -> Tensor:
    """Lower an (H,W,C) tensor to patch rows for matrix-product convolution."""
    return Tensor.wrap(kernels.im2col(x.data, kernel_h, kernel_w, stride))


def col2im(cols: Tensor, h: int, w: int, c: int,
           kernel_h: int, kernel_w: int, stride: int = 1) -> Tensor:
    """Adjoint of im2col: scatter patch-row values back additively."""
    return Tensor.wrap(kernels.col2im(cols.data, h, w, c, kernel_h, kernel_w, stride))
