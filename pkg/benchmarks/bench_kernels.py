"""Throughput comparison of the numba and pure-numpy scoring kernels.

Runs the packed one-query-vs-many kernel on a synthetic database with both
implementations, checks that they agree bit for bit, and reports queries per
second. Usage:

    python3 benchmarks/bench_kernels.py --n-candidates 2000 --rows 64 --dim 128
"""

import argparse
import time

import numpy as np

from homsim.kernels import (
    HAS_NUMBA,
    maxsim_many_numpy,
    tree_sum_f32_numpy,
)


def build_database(rng, n_candidates, rows, dim):
    lengths = rng.integers(max(1, rows // 2), rows + 1, size=n_candidates)
    offsets = np.zeros(n_candidates + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = rng.standard_normal((int(offsets[-1]), dim))
    flat /= np.linalg.norm(flat, axis=1, keepdims=True)
    return flat.astype(np.float32), offsets


def bench(kernel, queries, flat, offsets, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for q in queries:
            kernel(q, flat, offsets)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-candidates", type=int, default=2000)
    ap.add_argument("--n-queries", type=int, default=20)
    ap.add_argument("--rows", type=int, default=64)
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    flat, offsets = build_database(rng, args.n_candidates, args.rows, args.dim)
    queries = []
    for _ in range(args.n_queries):
        q = rng.standard_normal((args.rows, args.dim))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        queries.append(q.astype(np.float32))

    print(
        f"database: {args.n_candidates} candidates, <= {args.rows} rows, "
        f"dim {args.dim}; {args.n_queries} queries x {args.repeats} repeats"
    )

    results = {}
    results["numpy"] = bench(
        maxsim_many_numpy, queries, flat, offsets, args.repeats
    )

    if HAS_NUMBA:
        from homsim.kernels import maxsim_many_numba

        maxsim_many_numba(queries[0], flat, offsets)  # compile before timing
        results["numba"] = bench(
            maxsim_many_numba, queries, flat, offsets, args.repeats
        )
        a = maxsim_many_numpy(queries[0], flat, offsets)
        b = maxsim_many_numba(queries[0], flat, offsets)
        agree = np.array_equal(a, b)
        print(f"paths agree bit-exactly: {agree}")
        if not agree:
            return 1
    else:
        print("numba not importable; benchmarking the numpy path only")

    base = results["numpy"]
    for name, seconds in results.items():
        qps = args.n_queries / seconds
        print(
            f"{name:>6}: {seconds:8.3f} s  ({qps:8.1f} queries/s, "
            f"{base / seconds:5.2f}x vs numpy)"
        )
    # a sanity anchor so a broken build cannot report plausible numbers
    assert tree_sum_f32_numpy(np.ones(7, dtype=np.float32)) == np.float32(7.0)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
