"""Hot inner loops, numba-compiled when available.

Set ``LORACHAN_NO_NUMBA=1`` to force the pure-Python/NumPy fallback (also
used automatically if numba is not importable). Both paths execute the
same function bodies in the same operation order, so results are
bit-identical regardless of which path runs. ``benchmarks/bench_kernels.py``
compares the two.
"""
from __future__ import annotations

import os

import numpy as np

NUMBA_ENV_FLAG = "LORACHAN_NO_NUMBA"


def _ar_scan(y0: float, phi: float, innovations: np.ndarray, out: np.ndarray) -> None:
    # out[n] = phi * out[n-1] + innovations[n-1], loop-carried dependence
    out[0] = y0
    for n in range(1, out.shape[0]):
        out[n] = phi * out[n - 1] + innovations[n - 1]


def _lag1_sums(values: np.ndarray, mean: float) -> tuple:
    # Returns (sum of squared deviations, sum of lag-1 deviation products).
    prev = values[0] - mean
    s0 = prev * prev
    s1 = 0.0
    for n in range(1, values.shape[0]):
        cur = values[n] - mean
        s0 += cur * cur
        s1 += prev * cur
        prev = cur
    return s0, s1


def _numba_requested() -> bool:
    return os.environ.get(NUMBA_ENV_FLAG, "").strip().lower() not in ("1", "true", "yes")


USING_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        _ar_scan_jit = njit(cache=True)(_ar_scan)
        _lag1_sums_jit = njit(cache=True)(_lag1_sums)
        USING_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        USING_NUMBA = False


def ar_scan(y0: float, phi: float, innovations: np.ndarray) -> np.ndarray:
    """Run the first-order autoregressive recursion from y0.

    Returns an array of length ``len(innovations) + 1`` whose first entry
    is ``y0`` and whose n-th entry is ``phi * prev + innovations[n-1]``.
    """
    innovations = np.ascontiguousarray(innovations, dtype=np.float64)
    out = np.empty(innovations.shape[0] + 1, dtype=np.float64)
    if USING_NUMBA:
        _ar_scan_jit(float(y0), float(phi), innovations, out)
    else:
        _ar_scan(float(y0), float(phi), innovations, out)
    return out


def lag1_sums(values: np.ndarray, mean: float) -> tuple:
    """Sum of squared deviations and lag-1 deviation products around mean."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        return 0.0, 0.0
    if USING_NUMBA:
        return _lag1_sums_jit(values, float(mean))
    return _lag1_sums(values, float(mean))
