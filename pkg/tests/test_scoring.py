"""Set-vs-set scores, similarity maps, and ranking."""

import io

import numpy as np
import pytest

from homsim import (
    DimensionMismatchError,
    EmbeddingSet,
    EmptyDatabaseError,
    EmptySetError,
    MaxSimScorer,
    PackedEmbeddings,
    PooledScorer,
    ScoreMatrix,
    ZeroNormRowError,
    maxsim,
    maxsim_asymmetry_check,
    mean_pool_cosine,
    rank_candidates,
    score_matrix,
    similarity_map,
    similarity_map_score,
    write_similarity_csv,
)
from homsim.scoring import pooled_vector
from conftest import axis_set, unit_set


def embed(rows, protein_id="p", mask=None):
    return EmbeddingSet(rows=np.asarray(rows, dtype=np.float32), protein_id=protein_id, mask=mask)


class TestMaxSim:
    def test_hand_example(self):
        # row 1: max(0.6, 1.0) = 1.0; row 2: max(0.8, 0.0) = 0.8; total 1.8
        q = embed([[1.0, 0.0], [0.0, 1.0]], "q")
        d = embed([[0.6, 0.8], [1.0, 0.0]], "d")
        assert maxsim(q, d) == pytest.approx(1.8, abs=1e-6)

    def test_single_rows_reduce_to_dot(self):
        q = embed([[1.0, 0.0]], "q")
        d = embed([[0.6, 0.8]], "d")
        assert maxsim(q, d) == pytest.approx(0.6, abs=1e-7)

    def test_self_score_counts_valid_rows(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            s = unit_set(rng, int(rng.integers(1, 40)), 16, "s", n_pad=int(rng.integers(0, 4)))
            assert maxsim(s, s) == pytest.approx(s.n_valid, abs=1e-4)

    def test_asymmetric_by_construction(self):
        a = embed([[1.0, 0.0], [0.0, 1.0]], "a")
        b = embed([[1.0, 0.0]], "b")
        ab, ba = maxsim_asymmetry_check(a, b)
        assert ab == pytest.approx(1.0, abs=1e-6)  # second query row finds nothing better than 0
        assert ba == pytest.approx(1.0, abs=1e-6)
        c = embed([[0.6, 0.8], [0.0, 1.0]], "c")
        ac, ca = maxsim_asymmetry_check(a, c)
        assert ac != ca

    def test_padding_rows_change_nothing(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            q = unit_set(rng, 6, 8, "q")
            d = unit_set(rng, 5, 8, "d")
            rows = np.concatenate([q.rows, rng.normal(size=(3, 8)).astype(np.float32)])
            mask = np.concatenate([q.mask, np.zeros(3, dtype=bool)])
            q_pad = EmbeddingSet(rows=rows, protein_id="q", mask=mask)
            assert maxsim(q_pad, d) == maxsim(q, d)
            assert maxsim(d, q_pad) == maxsim(d, q)

    def test_candidate_permutation_invariance(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            q = unit_set(rng, 7, 8, "q")
            d = unit_set(rng, 9, 8, "d")
            perm = rng.permutation(9)
            d_perm = EmbeddingSet(rows=d.rows[perm], protein_id="d")
            assert maxsim(q, d_perm) == maxsim(q, d)

    def test_monotone_under_candidate_growth(self):
        rng = np.random.default_rng(34)
        for _ in range(20):
            q = unit_set(rng, 6, 8, "q")
            d = unit_set(rng, 4, 8, "d")
            extra = np.concatenate([d.rows, unit_set(rng, 1, 8, "x").rows])
            d_plus = EmbeddingSet(rows=extra, protein_id="d")
            assert maxsim(q, d_plus) >= maxsim(q, d) - 1e-6

    def test_empty_and_mismatched_inputs(self):
        q = embed([[1.0, 0.0]], "q")
        hollow = EmbeddingSet(
            rows=np.ones((2, 2), dtype=np.float32), protein_id="h", mask=[False, False]
        )
        with pytest.raises(EmptySetError, match="'h'"):
            maxsim(hollow, q)
        with pytest.raises(EmptySetError, match="'h'"):
            maxsim(q, hollow)
        d3 = embed([[1.0, 0.0, 0.0]], "d")
        with pytest.raises(DimensionMismatchError):
            maxsim(q, d3)


class TestScoreMatrix:
    def test_cells_match_pairwise_calls(self):
        rng = np.random.default_rng(41)
        rows = [unit_set(rng, int(rng.integers(1, 7)), 6, f"r{i}") for i in range(3)]
        cols = [unit_set(rng, int(rng.integers(1, 7)), 6, f"c{j}") for j in range(4)]
        sm = score_matrix(rows, cols)
        assert sm.row_ids == ("r0", "r1", "r2")
        assert sm.col_ids == ("c0", "c1", "c2", "c3")
        for i, q in enumerate(rows):
            for j, d in enumerate(cols):
                assert sm.values[i, j] == np.float32(maxsim(q, d))

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="shape"):
            ScoreMatrix(values=np.ones((2, 2)), row_ids=("a",), col_ids=("b", "c"))


class TestPooled:
    def test_pooled_vector_hand_example(self):
        # mean of e1 and e2 is (.5, .5); normalized -> (1/sqrt2, 1/sqrt2)
        s = embed([[1.0, 0.0], [0.0, 1.0]], "s")
        v = pooled_vector(s)
        assert np.allclose(v, [2**-0.5, 2**-0.5], atol=1e-7)

    def test_pooled_vector_is_unit_and_masked(self):
        rng = np.random.default_rng(42)
        s = unit_set(rng, 8, 12, "s", n_pad=3)
        v = pooled_vector(s)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12
        bare = EmbeddingSet(rows=s.valid_rows(), protein_id="s")
        assert np.allclose(v, pooled_vector(bare), atol=0)

    def test_identical_sets_have_cosine_one(self):
        rng = np.random.default_rng(43)
        s = unit_set(rng, 5, 8, "s")
        assert mean_pool_cosine(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_cosine_symmetric(self):
        rng = np.random.default_rng(44)
        a, b = unit_set(rng, 4, 8, "a"), unit_set(rng, 6, 8, "b")
        assert mean_pool_cosine(a, b) == pytest.approx(mean_pool_cosine(b, a), abs=1e-12)

    def test_cancelling_rows_raise(self):
        s = embed([[1.0, 0.0], [-1.0, 0.0]], "s")
        with pytest.raises(ZeroNormRowError):
            pooled_vector(s)

    def test_empty_set_raises(self):
        hollow = EmbeddingSet(
            rows=np.ones((1, 2), dtype=np.float32), protein_id="h", mask=[False]
        )
        with pytest.raises(EmptySetError):
            pooled_vector(hollow)


class TestSimilarityMap:
    def test_values_and_positions(self):
        rng = np.random.default_rng(51)
        q = unit_set(rng, 3, 4, "q", n_pad=2)
        d = unit_set(rng, 2, 4, "d", n_pad=1)
        sm = similarity_map(q, d)
        assert sm.values.shape == (3, 2)
        assert sm.query_positions == (0, 1, 2)
        assert sm.cand_positions == (0, 1)
        expect = q.valid_rows().astype(np.float64) @ d.valid_rows().astype(np.float64).T
        assert np.allclose(sm.values, expect, atol=1e-6)

    def test_positions_reference_original_rows(self):
        rows = np.array([[1.0, 0.0], [3.0, 3.0], [0.0, 1.0]], dtype=np.float32)
        q = EmbeddingSet(rows=rows, protein_id="q", mask=[True, False, True])
        d = embed([[1.0, 0.0]], "d")
        sm = similarity_map(q, d)
        assert sm.query_positions == (0, 2)

    def test_score_recovers_maxsim(self):
        rng = np.random.default_rng(52)
        for _ in range(20):
            q = unit_set(rng, int(rng.integers(1, 9)), 8, "q")
            d = unit_set(rng, int(rng.integers(1, 9)), 8, "d")
            assert similarity_map_score(similarity_map(q, d)) == pytest.approx(
                maxsim(q, d), abs=1e-6
            )

    def test_rejects_out_of_band_values(self):
        from homsim import SimilarityMap

        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            SimilarityMap(
                values=np.array([[1.5]]),
                query_id="q",
                cand_id="d",
                query_positions=(0,),
                cand_positions=(0,),
            )

    def test_csv_layout(self):
        sm = similarity_map(
            embed([[1.0, 0.0], [0.0, 1.0]], "q"),
            embed([[1.0, 0.0]], "d"),
        )
        buf = io.StringIO()
        write_similarity_csv(sm, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",0"
        assert lines[1].startswith("0,1.0000000")
        assert lines[2].startswith("1,0.0000000")


class TestRanking:
    def test_packed_matches_pairwise(self):
        rng = np.random.default_rng(61)
        sets = [unit_set(rng, int(rng.integers(1, 10)), 8, f"p{i}") for i in range(7)]
        packed = PackedEmbeddings(sets)
        assert len(packed) == 7
        q = unit_set(rng, 5, 8, "q")
        scores = packed.scores_for(q)
        for i, s in enumerate(sets):
            assert scores[i] == np.float32(maxsim(q, s))

    def test_packed_validation(self):
        rng = np.random.default_rng(62)
        with pytest.raises(EmptyDatabaseError):
            PackedEmbeddings([])
        mixed = [unit_set(rng, 3, 4, "a"), unit_set(rng, 3, 5, "b")]
        with pytest.raises(DimensionMismatchError):
            PackedEmbeddings(mixed)
        q3 = unit_set(rng, 2, 3, "q")
        with pytest.raises(DimensionMismatchError):
            PackedEmbeddings([unit_set(rng, 2, 4, "a")]).scores_for(q3)

    def test_rank_excludes_self_and_sorts(self):
        rng = np.random.default_rng(63)
        db = [unit_set(rng, 4, 8, f"p{i}") for i in range(5)]
        query = db[2]
        hits = rank_candidates(query, db)
        ids = [pid for pid, _ in hits]
        assert "p2" not in ids
        assert len(hits) == 4
        scores = [s for _, s in hits]
        assert scores == sorted(scores, reverse=True)

    def test_ties_break_by_id(self):
        q = axis_set(0, 4, "q")
        db = [axis_set(0, 4, "z_twin"), axis_set(0, 4, "a_twin"), axis_set(1, 4, "other")]
        hits = rank_candidates(q, db)
        assert [pid for pid, _ in hits] == ["a_twin", "z_twin", "other"]

    def test_k_truncation(self):
        rng = np.random.default_rng(64)
        db = [unit_set(rng, 3, 6, f"p{i}") for i in range(6)]
        q = unit_set(rng, 3, 6, "q")
        assert len(rank_candidates(q, db, k=2)) == 2
        full = rank_candidates(q, db)
        assert rank_candidates(q, db, k=2) == full[:2]

    def test_only_self_in_db(self):
        rng = np.random.default_rng(65)
        s = unit_set(rng, 3, 4, "solo")
        with pytest.raises(EmptyDatabaseError):
            rank_candidates(s, [s])

    def test_scorer_objects(self):
        rng = np.random.default_rng(66)
        db = [unit_set(rng, 4, 8, f"p{i}") for i in range(4)]
        ms, ps = MaxSimScorer(db), PooledScorer(db)
        assert (ms.name, ps.name) == ("maxsim", "pooled")
        assert ms.rank(db[0]) == rank_candidates(db[0], db)
        pooled_hits = ps.rank(db[0], k=2)
        assert len(pooled_hits) == 2
        assert all(pid != "p0" for pid, _ in pooled_hits)

    def test_pooled_scorer_orders_by_cosine(self):
        rng = np.random.default_rng(67)
        db = [unit_set(rng, 4, 8, f"p{i}") for i in range(4)]
        ps = PooledScorer(db)
        hits = ps.rank(db[0])
        for pid, score in hits:
            other = next(s for s in db if s.protein_id == pid)
            assert score == pytest.approx(mean_pool_cosine(db[0], other), abs=1e-12)
