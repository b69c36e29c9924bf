"""Benchmark the compiled kernel core against the pure-numpy fallback.

The two backends compute bitwise-identical results (checked here before
timing); the point of the compiled core is speed on the convolution hot
path. Run:

    python benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import time

import numpy as np

from landcnn import kernels
from landcnn.kernels import _ref

# (label, op, args builder) at the shapes the 32x32 and 224x224 networks hit
CASES = [
    ("matmul conv1@32px", "matmul", lambda r: (
        r.standard_normal((900, 27)).astype(np.float32),
        r.standard_normal((27, 32)).astype(np.float32))),
    ("matmul conv2@32px", "matmul", lambda r: (
        r.standard_normal((169, 288)).astype(np.float32),
        r.standard_normal((288, 64)).astype(np.float32))),
    ("matmul conv2@224px", "matmul", lambda r: (
        r.standard_normal((11881, 288)).astype(np.float32),
        r.standard_normal((288, 64)).astype(np.float32))),
    ("matmul dense-head", "matmul", lambda r: (
        r.standard_normal((1, 86528)).astype(np.float32),
        r.standard_normal((86528, 64)).astype(np.float32))),
    ("im2col 32x32x3 k3", "im2col", lambda r: (
        r.standard_normal((32, 32, 3)).astype(np.float32), 3, 3, 1)),
    ("im2col 224x224x3 k3", "im2col", lambda r: (
        r.standard_normal((224, 224, 3)).astype(np.float32), 3, 3, 1)),
    ("col2im 30x30 k3", "col2im", lambda r: (
        r.standard_normal((900, 27)).astype(np.float32), 32, 32, 3, 3, 3, 1)),
    ("maxpool 222x222x32", "maxpool", lambda r: (
        r.standard_normal((222, 222, 32)).astype(np.float32), 2, 2)),
]


def _time(fn, args, repeats):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _flops(label, args):
    if label.startswith("matmul"):
        m, k = args[0].shape
        n = args[1].shape[1]
        return 2.0 * m * k * n
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if kernels.BACKEND != "compiled":
        print("compiled backend is not built; nothing to compare against")
        print("(install with the Cython extension to benchmark)")
        return

    rng = np.random.default_rng(0)
    print(f"{'case':22s} {'compiled':>12s} {'numpy-ref':>12s} {'speedup':>8s}")
    for label, op, build in CASES:
        case_args = build(rng)
        fast_fn = getattr(kernels._impl, op)
        ref_fn = getattr(_ref, op)
        fast_out = fast_fn(*case_args)
        ref_out = ref_fn(*case_args)
        if op == "maxpool":
            assert (fast_out[0] == ref_out[0]).all() and (fast_out[1] == ref_out[1]).all()
        else:
            assert (fast_out == ref_out).all(), f"{label}: backends disagree"
        t_fast = _time(fast_fn, case_args, args.repeats)
        t_ref = _time(ref_fn, case_args, args.repeats)
        flops = _flops(label, case_args)
        rate = f"  {flops / t_fast / 1e9:5.1f} GFLOP/s" if flops else ""
        print(f"{label:22s} {t_fast * 1e3:10.3f}ms {t_ref * 1e3:10.3f}ms "
              f"{t_ref / t_fast:7.1f}x{rate}")
    print("\nall outputs bitwise identical across backends")


if __name__ == "__main__":
    main()
