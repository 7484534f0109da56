"""Hot scoring kernels: numba-accelerated with a pure-numpy fallback.

The late-interaction score walks every (query row, candidate row) pair, so
ranking a query against a database is by far the engine's hottest loop. Two
interchangeable implementations live here:

* numba ``@njit`` kernels (default when numba imports cleanly), and
* vectorized numpy equivalents.

Set ``HOMSIM_PURE_NUMPY=1`` to force the numpy path; results are identical
either way, only throughput changes (see benchmarks/bench_kernels.py).

Numeric contract shared by both paths: inner products accumulate in f64 from
f32 inputs (f32*f32 products are exact in f64), per-row maxima are cast to
f32, and the outer sum runs in f32 with pairwise (tree) summation so the
result does not depend on any parallel schedule.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAS_NUMBA = False

_FLAG = os.environ.get("HOMSIM_PURE_NUMPY", "").strip().lower()
USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes")


def using_numba() -> bool:
    """True when the accelerated kernel path is active."""
    return USE_NUMBA


# ---------------------------------------------------------------------------
# pure-numpy path
# ---------------------------------------------------------------------------


def tree_sum_f32_numpy(values: np.ndarray) -> np.float32:
    """Pairwise (tree) summation of a 1-D f32 array.

    Adjacent elements are combined level by level; an odd leftover is carried
    to the next level unchanged. The numba twin applies the exact same tree,
    so both paths round identically.
    """
    x = np.ascontiguousarray(values, dtype=np.float32).copy()
    n = x.shape[0]
    if n == 0:
        return np.float32(0.0)
    while n > 1:
        half = n // 2
        x[:half] = x[0 : 2 * half : 2] + x[1 : 2 * half : 2]
        if n & 1:
            x[half] = x[n - 1]
        n = half + (n & 1)
    return np.float32(x[0])


def maxsim_pair_numpy(q: np.ndarray, d: np.ndarray) -> float:
    """MaxSim over valid rows only: sum over query rows of the best dot."""
    sims = q.astype(np.float64) @ d.astype(np.float64).T
    best = sims.max(axis=1).astype(np.float32)
    return float(tree_sum_f32_numpy(best))


def maxsim_many_numpy(
    q: np.ndarray, flat: np.ndarray, offsets: np.ndarray
) -> np.ndarray:
    """Score one query against candidates packed as (flat rows, offsets)."""
    n = offsets.shape[0] - 1
    out = np.empty(n, dtype=np.float32)
    q64 = q.astype(np.float64)
    flat64 = flat.astype(np.float64)
    for c in range(n):
        sims = q64 @ flat64[offsets[c] : offsets[c + 1]].T
        best = sims.max(axis=1).astype(np.float32)
        out[c] = tree_sum_f32_numpy(best)
    return out


def sim_matrix_numpy(q: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Full residue-by-residue cosine matrix (valid rows only), f32."""
    return (q.astype(np.float64) @ d.astype(np.float64).T).astype(np.float32)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    kwd = {"cache": True, "nogil": True}

    @nb.njit(**kwd)
    def _tree_sum_f32_nb(values):  # pragma: no cover - exercised via wrappers
        n = values.shape[0]
        if n == 0:
            return np.float32(0.0)
        buf = values.copy()
        while n > 1:
            half = n // 2
            for i in range(half):
                buf[i] = buf[2 * i] + buf[2 * i + 1]
            if n & 1:
                buf[half] = buf[n - 1]
            n = half + (n & 1)
        return buf[0]

    @nb.njit(**kwd)
    def _row_maxima_nb(q, d):  # pragma: no cover
        tq = q.shape[0]
        td = d.shape[0]
        dim = q.shape[1]
        best = np.empty(tq, dtype=np.float32)
        for t in range(tq):
            m = -np.inf
            for s in range(td):
                acc = 0.0
                for k in range(dim):
                    acc += np.float64(q[t, k]) * np.float64(d[s, k])
                if acc > m:
                    m = acc
            best[t] = np.float32(m)
        return best

    @nb.njit(**kwd)
    def _maxsim_pair_nb(q, d):  # pragma: no cover
        return _tree_sum_f32_nb(_row_maxima_nb(q, d))

    @nb.njit(parallel=True, **kwd)
    def _maxsim_many_nb(q, flat, offsets):  # pragma: no cover
        n = offsets.shape[0] - 1
        out = np.empty(n, dtype=np.float32)
        for c in nb.prange(n):
            out[c] = _maxsim_pair_nb(q, flat[offsets[c] : offsets[c + 1]])
        return out

    def maxsim_pair_numba(q: np.ndarray, d: np.ndarray) -> float:
        return float(_maxsim_pair_nb(np.ascontiguousarray(q), np.ascontiguousarray(d)))

    def maxsim_many_numba(
        q: np.ndarray, flat: np.ndarray, offsets: np.ndarray
    ) -> np.ndarray:
        return _maxsim_many_nb(
            np.ascontiguousarray(q),
            np.ascontiguousarray(flat),
            np.ascontiguousarray(offsets, dtype=np.int64),
        )


# active dispatch ------------------------------------------------------------

if USE_NUMBA:
    maxsim_pair_kernel = maxsim_pair_numba
    maxsim_many_kernel = maxsim_many_numba
else:
    maxsim_pair_kernel = maxsim_pair_numpy
    maxsim_many_kernel = maxsim_many_numpy

sim_matrix_kernel = sim_matrix_numpy
