# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: matmul, im2col/col2im, max-pool forward/backward.

matmul accumulates partial products strictly in ascending inner-index
order and the build disables FP contraction, so every result is bitwise
identical to the numpy reference backend (kernels._ref) in both
precisions. col2im and maxpool_grad scatter in the same fixed order as
the reference for the same reason.
"""
import numpy as np

cimport numpy as cnp

ctypedef fused real:
    float
    double


def matmul(real[:, ::1] a, real[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t k = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    if real is float:
        out_np = np.zeros((m, n), dtype=np.float32)
    else:
        out_np = np.zeros((m, n), dtype=np.float64)
    cdef real[:, ::1] c = out_np
    cdef Py_ssize_t i, p, j
    cdef real aip
    with nogil:
        for i in range(m):
            for p in range(k):
                aip = a[i, p]
                for j in range(n):
                    c[i, j] = c[i, j] + aip * b[p, j]
    return out_np


def im2col(real[:, :, ::1] x, Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t h = x.shape[0]
    cdef Py_ssize_t w = x.shape[1]
    cdef Py_ssize_t c = x.shape[2]
    cdef Py_ssize_t ho = (h - kh) // stride + 1
    cdef Py_ssize_t wo = (w - kw) // stride + 1
    if real is float:
        out_np = np.empty((ho * wo, kh * kw * c), dtype=np.float32)
    else:
        out_np = np.empty((ho * wo, kh * kw * c), dtype=np.float64)
    cdef real[:, ::1] cols = out_np
    cdef Py_ssize_t i, j, r, q, di, dj, ch
    with nogil:
        for i in range(ho):
            for j in range(wo):
                r = i * wo + j
                q = 0
                for di in range(kh):
                    for dj in range(kw):
                        for ch in range(c):
                            cols[r, q] = x[i * stride + di, j * stride + dj, ch]
                            q += 1
    return out_np


def col2im(real[:, ::1] cols, Py_ssize_t h, Py_ssize_t w, Py_ssize_t c,
           Py_ssize_t kh, Py_ssize_t kw, Py_ssize_t stride):
    cdef Py_ssize_t ho = (h - kh) // stride + 1
    cdef Py_ssize_t wo = (w - kw) // stride + 1
    if real is float:
        out_np = np.zeros((h, w, c), dtype=np.float32)
    else:
        out_np = np.zeros((h, w, c), dtype=np.float64)
    cdef real[:, :, ::1] x = out_np
    cdef Py_ssize_t i, j, r, di, dj, ch, base
    # (di, dj) is the outer loop so overlapping patches accumulate into a
    # target cell in the same order as the reference backend.
    with nogil:
        for di in range(kh):
            for dj in range(kw):
                base = (di * kw + dj) * c
                for i in range(ho):
                    for j in range(wo):
                        r = i * wo + j
                        for ch in range(c):
                            x[i * stride + di, j * stride + dj, ch] = (
                                x[i * stride + di, j * stride + dj, ch]
                                + cols[r, base + ch]
                            )
    return out_np


def maxpool(real[:, :, ::1] x, Py_ssize_t pool, Py_ssize_t stride):
    cdef Py_ssize_t h = x.shape[0]
    cdef Py_ssize_t w = x.shape[1]
    cdef Py_ssize_t c = x.shape[2]
    cdef Py_ssize_t ho = (h - pool) // stride + 1
    cdef Py_ssize_t wo = (w - pool) // stride + 1
    if real is float:
        out_np = np.empty((ho, wo, c), dtype=np.float32)
    else:
        out_np = np.empty((ho, wo, c), dtype=np.float64)
    sw_np = np.empty((ho, wo, c), dtype=np.int64)
    cdef real[:, :, ::1] out = out_np
    cdef cnp.int64_t[:, :, ::1] sw = sw_np
    cdef Py_ssize_t i, j, ch, di, dj, best_idx
    cdef real v, best
    with nogil:
        for i in range(ho):
            for j in range(wo):
                for ch in range(c):
                    best = x[i * stride, j * stride, ch]
                    best_idx = 0
                    for di in range(pool):
                        for dj in range(pool):
                            v = x[i * stride + di, j * stride + dj, ch]
                            # strict > keeps the first row-major maximum
                            if v > best:
                                best = v
                                best_idx = di * pool + dj
                    out[i, j, ch] = best
                    sw[i, j, ch] = best_idx
    return out_np, sw_np


def maxpool_grad(real[:, :, ::1] gout, cnp.int64_t[:, :, ::1] sw,
                 Py_ssize_t h, Py_ssize_t w, Py_ssize_t pool, Py_ssize_t stride):
    cdef Py_ssize_t ho = gout.shape[0]
    cdef Py_ssize_t wo = gout.shape[1]
    cdef Py_ssize_t c = gout.shape[2]
    if real is float:
        out_np = np.zeros((h, w, c), dtype=np.float32)
    else:
        out_np = np.zeros((h, w, c), dtype=np.float64)
    cdef real[:, :, ::1] dx = out_np
    cdef Py_ssize_t i, j, ch, di, dj
    with nogil:
        for i in range(ho):
            for j in range(wo):
                for ch in range(c):
                    di = sw[i, j, ch] // pool
                    dj = sw[i, j, ch] % pool
                    dx[i * stride + di, j * stride + dj, ch] = (
                        dx[i * stride + di, j * stride + dj, ch] + gout[i, j, ch]
                    )
    return out_np
