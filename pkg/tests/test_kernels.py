"""Scoring kernels: numeric contract, path equality, env-flag dispatch."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from homsim import kernels
from conftest import unit_rows


def naive_maxsim(q: np.ndarray, d: np.ndarray) -> float:
    """Double loop over row pairs, all in f64."""
    total = 0.0
    for t in range(q.shape[0]):
        best = -math.inf
        for s in range(d.shape[0]):
            best = max(best, float(np.dot(q[t].astype(np.float64), d[s].astype(np.float64))))
        total += best
    return total


class TestTreeSum:
    def test_empty_and_single(self):
        assert kernels.tree_sum_f32_numpy(np.array([], dtype=np.float32)) == 0.0
        assert kernels.tree_sum_f32_numpy(np.array([2.5], dtype=np.float32)) == np.float32(2.5)

    def test_small_integer_example(self):
        # levels: [1,2,3,4,5] -> [3,7,5] -> [10,5] -> [15], exact in f32
        x = np.array([1, 2, 3, 4, 5], dtype=np.float32)
        assert kernels.tree_sum_f32_numpy(x) == np.float32(15.0)

    def test_close_to_exact_sum(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 400))
            x = rng.normal(size=n).astype(np.float32)
            exact = math.fsum(float(v) for v in x)
            got = float(kernels.tree_sum_f32_numpy(x))
            assert abs(got - exact) <= 1e-4 * max(1.0, abs(exact)) + 1e-4

    def test_input_not_modified(self):
        x = np.array([1.0, 2.0, 3.0], dtype=np.float32)
        kernels.tree_sum_f32_numpy(x)
        assert np.array_equal(x, [1.0, 2.0, 3.0])


class TestNumpyKernels:
    def test_pair_matches_naive(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            tq, td = rng.integers(1, 12), rng.integers(1, 12)
            d = int(rng.choice([3, 8, 32]))
            q, c = unit_rows(rng, tq, d), unit_rows(rng, td, d)
            assert abs(kernels.maxsim_pair_numpy(q, c) - naive_maxsim(q, c)) < 1e-5

    def test_many_matches_per_pair_loop(self):
        rng = np.random.default_rng(14)
        q = unit_rows(rng, 5, 8)
        cands = [unit_rows(rng, int(rng.integers(1, 9)), 8) for _ in range(6)]
        flat = np.concatenate(cands)
        offsets = np.zeros(len(cands) + 1, dtype=np.int64)
        np.cumsum([c.shape[0] for c in cands], out=offsets[1:])
        out = kernels.maxsim_many_numpy(q, flat, offsets)
        for i, c in enumerate(cands):
            assert out[i] == np.float32(kernels.maxsim_pair_numpy(q, c))

    def test_sim_matrix_values(self):
        rng = np.random.default_rng(15)
        q, c = unit_rows(rng, 4, 6), unit_rows(rng, 3, 6)
        m = kernels.sim_matrix_numpy(q, c)
        assert m.shape == (4, 3)
        assert m.dtype == np.float32
        expect = (q.astype(np.float64) @ c.astype(np.float64).T).astype(np.float32)
        assert np.array_equal(m, expect)


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not importable")
class TestNumbaPathEquality:
    """Both paths must round identically, not just approximately."""

    def test_pair_bit_identical(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            tq, td = rng.integers(1, 20), rng.integers(1, 20)
            d = int(rng.choice([2, 7, 64]))
            q, c = unit_rows(rng, tq, d), unit_rows(rng, td, d)
            assert kernels.maxsim_pair_numba(q, c) == kernels.maxsim_pair_numpy(q, c)

    def test_many_bit_identical(self):
        rng = np.random.default_rng(22)
        q = unit_rows(rng, 9, 16)
        cands = [unit_rows(rng, int(rng.integers(1, 15)), 16) for _ in range(20)]
        flat = np.concatenate(cands)
        offsets = np.zeros(len(cands) + 1, dtype=np.int64)
        np.cumsum([c.shape[0] for c in cands], out=offsets[1:])
        a = kernels.maxsim_many_numba(q, flat, offsets)
        b = kernels.maxsim_many_numpy(q, flat, offsets)
        assert np.array_equal(a, b)

    def test_dispatch_points_at_numba_by_default(self):
        if os.environ.get("HOMSIM_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes"):
            pytest.skip("suite running with the numpy path forced")
        assert kernels.using_numba()
        assert kernels.maxsim_pair_kernel is kernels.maxsim_pair_numba


class TestEnvFlagDispatch:
    def test_flag_forces_numpy_path(self):
        env = dict(os.environ, HOMSIM_PURE_NUMPY="1")
        out = subprocess.run(
            [sys.executable, "-c", "import homsim.kernels as k; print(k.using_numba())"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == "False"

    def test_both_paths_agree_across_processes(self):
        """Score the same arrays under both env settings; outputs must match."""
        prog = (
            "import numpy as np, homsim.kernels as k\n"
            "rng = np.random.default_rng(99)\n"
            "q = rng.normal(size=(7, 12)); q /= np.linalg.norm(q, axis=1, keepdims=True)\n"
            "d = rng.normal(size=(11, 12)); d /= np.linalg.norm(d, axis=1, keepdims=True)\n"
            "print(repr(k.maxsim_pair_kernel(q.astype(np.float32), d.astype(np.float32))))\n"
        )
        results = []
        for flag in ("0", "1"):
            env = dict(os.environ, HOMSIM_PURE_NUMPY=flag)
            out = subprocess.run(
                [sys.executable, "-c", prog], env=env, capture_output=True, text=True, check=True
            )
            results.append(out.stdout.strip())
        assert results[0] == results[1]
