"""Shared test oracles: central finite differences, naive matrix/convolution
reference implementations, and relative-error measurement.

These stay deliberately independent of the library's computation paths.
"""
import numpy as np

from landcnn.tensor import Tensor


def rel_err(a, b, floor=1e-6):
    """Max elementwise |a-b| / max(|a|, |b|, floor)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def numeric_grad(f, arr, step=1e-5):
    """Central finite differences of the scalar f() with respect to arr,
    perturbing arr in place (float64)."""
    assert arr.dtype == np.float64
    grad = np.zeros(arr.shape, dtype=np.float64)
    flat = arr.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = f()
        flat[i] = orig - step
        f_minus = f()
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def brute_force_report(y_true, y_pred, k):
    """Per-item counting oracle for every reported classification rate."""
    per_class = []
    for c in range(k):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        support = sum(1 for t in y_true if t == c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class.append((precision, recall, f1, support))
    acc = sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)
    return per_class, acc


def naive_matmul(a, b):
    """Triple-loop matrix product with scalar ascending-p accumulation."""
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n), dtype=a.dtype)
    for i in range(m):
        for j in range(n):
            s = a.dtype.type(0)
            for p in range(k):
                s = s + a[i, p] * b[p, j]
            out[i, j] = s
    return out


def naive_conv2d(x, w, b, stride=1):
    """Direct-definition valid convolution; accumulation runs row-major
    over (kernel row, kernel col, channel), matching the im2col layout."""
    h, wd, c = x.shape
    f, kh, kw, _ = w.shape
    ho = (h - kh) // stride + 1
    wo = (wd - kw) // stride + 1
    out = np.zeros((ho, wo, f), dtype=x.dtype)
    for i in range(ho):
        for j in range(wo):
            for fi in range(f):
                s = x.dtype.type(0)
                for di in range(kh):
                    for dj in range(kw):
                        for ch in range(c):
                            s = s + x[i * stride + di, j * stride + dj, ch] * w[fi, di, dj, ch]
                out[i, j, fi] = s + b[fi]
    return out


def check_network_grads(net, x, target, step=1e-5, floor=1e-6):
    """Compare analytic gradients of the cross-entropy loss against central
    finite differences for the input and every parameter; returns the max
    relative error. The network must be in float64."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    loss, _ = net.forward(Tensor.wrap(x), target)
    dx = net.backward()
    analytic = {"<input>": dx.data.copy()}
    for name, layer, key in net.param_slots():
        analytic[name] = layer.grads[key].data.copy()

    def loss_fn():
        return net.forward(Tensor.wrap(x.copy()), target)[0]

    worst = rel_err(analytic["<input>"], numeric_grad(loss_fn, x, step), floor)
    for name, layer, key in net.param_slots():
        numeric = numeric_grad(loss_fn, layer.params[key].data, step)
        worst = max(worst, rel_err(analytic[name], numeric, floor))
    return worst


def check_layer_grads(layer, x, rng, step=1e-5, floor=1e-6):
    """Gradient-check a single layer through a random-projection scalar
    loss L = sum(forward(x) * r). Returns the max relative error over the
    input gradient and all parameter gradients."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = layer.forward(Tensor.wrap(x))
    r = rng.standard_normal(out.shape)
    dx = layer.backward(Tensor.wrap(r))
    analytic = {"<input>": dx.data.copy()}
    for key in layer.params:
        analytic[key] = layer.grads[key].data.copy()

    def loss_fn():
        return float(np.sum(layer.forward(Tensor.wrap(x.copy())).data * r))

    worst = rel_err(analytic["<input>"], numeric_grad(loss_fn, x, step), floor)
    for key in layer.params:
        numeric = numeric_grad(loss_fn, layer.params[key].data, step)
        worst = max(worst, rel_err(analytic[key], numeric, floor))
    return worst
