"""Pure-numpy reference kernels.

Arithmetic mirrors the compiled backend exactly: matmul accumulates
partial products in ascending inner-index order (one rounded multiply,
one rounded add per contribution), col2im and maxpool_grad scatter in
the same fixed order. Outputs are bitwise identical to kernels._fast.
"""
import numpy as np


def matmul(a, b):
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n), dtype=a.dtype)
    for p in range(k):
        out += a[:, p, np.newaxis] * b[p]
    return out


def im2col(x, kh, kw, stride):
    h, w, c = x.shape
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(0, 1))
    win = win[::stride, ::stride]  # (ho, wo, c, kh, kw)
    cols = win.transpose(0, 1, 3, 4, 2).reshape(ho * wo, kh * kw * c)
    return np.ascontiguousarray(cols)


def col2im(cols, h, w, c, kh, kw, stride):
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    g = cols.reshape(ho, wo, kh, kw, c)
    out = np.zeros((h, w, c), dtype=cols.dtype)
    for di in range(kh):
        for dj in range(kw):
            out[di:di + ho * stride:stride, dj:dj + wo * stride:stride] += g[:, :, di, dj]
    return out


def maxpool(x, pool, stride):
    h, w, c = x.shape
    ho = (h - pool) // stride + 1
    wo = (w - pool) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (pool, pool), axis=(0, 1))
    win = win[::stride, ::stride]  # (ho, wo, c, pool, pool)
    flat = win.reshape(ho, wo, c, pool * pool)
    sw = flat.argmax(axis=3)  # argmax returns the first row-major maximum
    out = np.take_along_axis(flat, sw[..., np.newaxis], axis=3)[..., 0]
    return np.ascontiguousarray(out), sw.astype(np.int64)


def maxpool_grad(gout, sw, h, w, pool, stride):
    ho, wo, c = gout.shape
    dx = np.zeros((h, w, c), dtype=gout.dtype)
    ii = (np.arange(ho) * stride)[:, np.newaxis, np.newaxis] + sw // pool
    jj = (np.arange(wo) * stride)[np.newaxis, :, np.newaxis] + sw % pool
    cc = np.broadcast_to(np.arange(c), (ho, wo, c))
    np.add.at(dx, (ii, jj, cc), gout)
    return dx
