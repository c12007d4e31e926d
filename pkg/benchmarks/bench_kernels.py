"""Benchmark the jitted kernels against the pure-Python/NumPy fallback.

Usage: python benchmarks/bench_kernels.py

The fallback bodies are the same functions numba compiles, so this
measures the jit speedup directly. Running the whole package on the
fallback path instead is a matter of LORACHAN_NO_NUMBA=1.
"""
import time

import numpy as np

from lorachan import _kernels


def best_of(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not _kernels.USING_NUMBA:
        print("numba is disabled (LORACHAN_NO_NUMBA set or import failed); "
              "nothing to compare")
        return

    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'n':>10} {'fallback':>12} {'numba':>12} "
          f"{'speedup':>9}")
    for n in (100_000, 1_000_000, 10_000_000):
        eps = rng.normal(0.0, 1.0, n - 1)
        out = np.empty(n)
        _kernels._ar_scan_jit(0.0, 0.974, eps, out)  # warm the jit
        t_py = best_of(_kernels._ar_scan, 0.0, 0.974, eps, out)
        t_nb = best_of(_kernels._ar_scan_jit, 0.0, 0.974, eps, out)
        print(f"{'ar_scan':<12} {n:>10} {t_py:>11.4f}s {t_nb:>11.4f}s "
              f"{t_py / t_nb:>8.1f}x")

    for n in (100_000, 1_000_000, 10_000_000):
        values = rng.normal(0.0, 1.0, n)
        mean = float(values.mean())
        _kernels._lag1_sums_jit(values, mean)
        t_py = best_of(_kernels._lag1_sums, values, mean)
        t_nb = best_of(_kernels._lag1_sums_jit, values, mean)
        print(f"{'lag1_sums':<12} {n:>10} {t_py:>11.4f}s {t_nb:>11.4f}s "
              f"{t_py / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
