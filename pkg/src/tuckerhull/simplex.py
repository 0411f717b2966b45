"""Euclidean projection onto the probability simplex."""
from __future__ import annotations

import numpy as np


def project_simplex(v, method: str = "sort") -> np.ndarray:
    """Project ``v`` onto ``{x : x >= 0, sum(x) = 1}``.

    The solution is ``max(v - tau, 0)`` for the unique threshold ``tau``
    making the entries sum to one. ``method="sort"`` finds ``tau`` by sorting
    (O(N log N)); ``method="pivot"`` uses randomized pivoting, expected O(N).
    Both return the same point.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a vector with non-finite entries")
    if method == "sort":
        tau = _threshold_sort(v)
    elif method == "pivot":
        tau = _threshold_pivot(v)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.maximum(v - tau, 0.0)


def _threshold_sort(v: np.ndarray) -> float:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / idx > 0)
    return css[rho - 1] / rho


def _threshold_pivot(v: np.ndarray) -> float:
    # Duchi et al. (2008), expected linear time. Fixed seed keeps it reproducible.
    rng = np.random.default_rng(0)
    cand = v
    s = 0.0
    rho = 0
    while cand.size:
        p = rng.integers(cand.size)
        upper = cand >= cand[p]
        ds, drho = cand[upper].sum(), np.count_nonzero(upper)
        if (s + ds) - (rho + drho) * cand[p] < 1.0:
            s += ds
            rho += drho
            cand = cand[~upper]
        else:
            upper[p] = False
            cand = cand[upper]
    return (s - 1.0) / rho
