"""Value types, sequence sanitizing, normalization, and projection."""

import numpy as np
import pytest

from homsim import (
    DimensionMismatchError,
    EmbeddingSet,
    HiddenSet,
    NonFiniteError,
    ProjectionHead,
    ProteinRecord,
    ZeroNormRowError,
    l2_normalize_rows,
    normalize_hidden,
    project,
    sanitize_sequence,
    truncate_rows,
    truncate_sequence,
)
from homsim.core import MAX_ROWS


class TestSanitizeSequence:
    def test_uppercases(self):
        assert sanitize_sequence("acdefg") == "ACDEFG"

    def test_unknown_letters_become_x(self, caplog):
        with caplog.at_level("WARNING", logger="homsim"):
            out = sanitize_sequence("ACBZ", record_id="p1")
        assert out == "ACXX"
        assert "p1" in caplog.text

    def test_clean_sequence_untouched_and_silent(self, caplog):
        with caplog.at_level("WARNING", logger="homsim"):
            assert sanitize_sequence("ACDEFGHIKLMNPQRSTVWYX") == "ACDEFGHIKLMNPQRSTVWYX"
        assert not caplog.records

    def test_record_sanitizes_on_construction(self):
        rec = ProteinRecord(id="q", sequence="ac1d")
        assert rec.sequence == "ACXD"

    def test_record_requires_id(self):
        with pytest.raises(ValueError, match="non-empty"):
            ProteinRecord(id="", sequence="ACDE")


class TestHiddenSet:
    def test_basic_properties(self):
        rows = np.arange(12, dtype=np.float32).reshape(3, 4)
        h = HiddenSet(rows=rows, protein_id="p")
        assert (h.n_rows, h.row_dim, h.n_valid) == (3, 4, 3)
        assert np.array_equal(h.valid_rows(), rows)

    def test_mask_selects_valid_rows(self):
        rows = np.ones((4, 2), dtype=np.float32)
        rows[2] = 7.0
        h = HiddenSet(rows=rows, protein_id="p", mask=[True, False, True, False])
        assert h.n_valid == 2
        assert np.array_equal(h.valid_rows(), rows[[0, 2]])

    def test_rows_frozen(self):
        h = HiddenSet(rows=np.ones((2, 2), dtype=np.float32), protein_id="p")
        with pytest.raises(ValueError):
            h.rows[0, 0] = 5.0

    def test_rejects_non_finite(self):
        rows = np.ones((2, 3), dtype=np.float32)
        rows[1, 2] = np.nan
        with pytest.raises(NonFiniteError):
            HiddenSet(rows=rows, protein_id="p")

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="2-D"):
            HiddenSet(rows=np.ones(3, dtype=np.float32), protein_id="p")
        with pytest.raises(ValueError, match="mask"):
            HiddenSet(rows=np.ones((2, 2), dtype=np.float32), protein_id="p", mask=[True])


class TestEmbeddingSet:
    def test_accepts_unit_rows(self):
        rows = np.array([[0.6, 0.8], [1.0, 0.0]], dtype=np.float32)
        e = EmbeddingSet(rows=rows, protein_id="p")
        assert e.dim == 2 and e.n_valid == 2

    def test_rejects_off_unit_valid_row(self):
        rows = np.array([[1.0, 0.0], [0.9, 0.0]], dtype=np.float32)
        with pytest.raises(ValueError, match="row 1"):
            EmbeddingSet(rows=rows, protein_id="p")

    def test_padded_rows_unconstrained(self):
        rows = np.array([[1.0, 0.0], [40.0, -3.0]], dtype=np.float32)
        e = EmbeddingSet(rows=rows, protein_id="p", mask=[True, False])
        assert e.n_valid == 1

    def test_error_names_original_row_index(self):
        rows = np.array([[9.0, 9.0], [1.0, 0.0], [2.0, 0.0]], dtype=np.float32)
        with pytest.raises(ValueError, match="row 2"):
            EmbeddingSet(rows=rows, protein_id="p", mask=[False, True, True])


class TestProjectionHead:
    def test_shape_properties(self):
        head = ProjectionHead(weights=np.zeros((5, 3), dtype=np.float32) + 0.1)
        assert (head.d_out, head.h_in) == (5, 3)

    def test_rejects_non_finite(self):
        w = np.ones((2, 2))
        w[0, 0] = np.inf
        with pytest.raises(NonFiniteError):
            ProjectionHead(weights=w)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ProjectionHead(weights=np.ones((0, 4)))


class TestL2NormalizeRows:
    def test_hand_example(self):
        # (3, 4) has norm 5, so the unit row is exactly (0.6, 0.8)
        out = l2_normalize_rows(np.array([[3.0, 4.0]], dtype=np.float32))
        assert np.allclose(out, [[0.6, 0.8]], atol=1e-7)

    def test_all_rows_unit_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            t, d = rng.integers(1, 30), rng.integers(2, 64)
            rows = rng.normal(size=(t, d)).astype(np.float32) * 10.0
            norms = np.linalg.norm(l2_normalize_rows(rows).astype(np.float64), axis=1)
            assert np.max(np.abs(norms - 1.0)) < 1e-6

    def test_masked_rows_left_untouched(self):
        rows = np.array([[3.0, 4.0], [5.0, 12.0]], dtype=np.float32)
        out = l2_normalize_rows(rows, mask=np.array([True, False]))
        assert np.allclose(out[0], [0.6, 0.8])
        assert np.array_equal(out[1], rows[1])

    def test_zero_valid_row_raises_with_index(self):
        rows = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
        with pytest.raises(ZeroNormRowError) as exc:
            l2_normalize_rows(rows)
        assert exc.value.row_index == 1

    def test_zero_masked_row_ok(self):
        rows = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
        out = l2_normalize_rows(rows, mask=np.array([True, False]))
        assert np.array_equal(out[1], [0.0, 0.0])

    def test_rejects_nan_and_non_2d(self):
        with pytest.raises(NonFiniteError):
            l2_normalize_rows(np.array([[np.nan, 1.0]]))
        with pytest.raises(ValueError, match="2-D"):
            l2_normalize_rows(np.ones(4))


class TestNormalizeHidden:
    def test_preserves_id_mask_and_shape(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(5, 6)).astype(np.float32)
        mask = np.array([True, True, False, True, False])
        h = HiddenSet(rows=rows, protein_id="px", mask=mask)
        e = normalize_hidden(h)
        assert e.protein_id == "px"
        assert np.array_equal(e.mask, mask)
        assert e.rows.shape == rows.shape
        norms = np.linalg.norm(e.valid_rows().astype(np.float64), axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-6


class TestProject:
    def test_matches_manual_computation(self):
        rng = np.random.default_rng(3)
        h = HiddenSet(rows=rng.normal(size=(4, 6)).astype(np.float32), protein_id="p")
        w = rng.normal(size=(3, 6)).astype(np.float32)
        e = project(h, ProjectionHead(weights=w))
        manual = h.rows.astype(np.float32) @ w.T
        manual = manual.astype(np.float64)
        manual /= np.linalg.norm(manual, axis=1, keepdims=True)
        assert np.allclose(e.rows, manual.astype(np.float32), atol=1e-7)

    def test_dim_mismatch(self):
        h = HiddenSet(rows=np.ones((2, 4), dtype=np.float32), protein_id="p")
        head = ProjectionHead(weights=np.ones((3, 5), dtype=np.float32))
        with pytest.raises(DimensionMismatchError):
            project(h, head)

    def test_row_annihilated_by_head(self):
        # W keeps only the second coordinate, so (5, 0) maps to zero
        h = HiddenSet(
            rows=np.array([[1.0, 2.0], [5.0, 0.0]], dtype=np.float32), protein_id="p"
        )
        head = ProjectionHead(weights=np.array([[0.0, 1.0]], dtype=np.float32))
        with pytest.raises(ZeroNormRowError) as exc:
            project(h, head)
        assert exc.value.row_index == 1

    def test_masked_row_may_be_annihilated(self):
        h = HiddenSet(
            rows=np.array([[1.0, 2.0], [5.0, 0.0]], dtype=np.float32),
            protein_id="p",
            mask=[True, False],
        )
        head = ProjectionHead(weights=np.array([[0.0, 1.0]], dtype=np.float32))
        e = project(h, head)
        assert e.n_valid == 1


class TestTruncation:
    def test_sequence_cap(self):
        assert truncate_sequence("A" * 300) == "A" * MAX_ROWS
        assert truncate_sequence("ACDE") == "ACDE"

    def test_rows_cap_keeps_prefix(self):
        rng = np.random.default_rng(5)
        rows = rng.normal(size=(MAX_ROWS + 10, 3)).astype(np.float32)
        h = HiddenSet(rows=rows, protein_id="p")
        t = truncate_rows(h)
        assert t.n_rows == MAX_ROWS
        assert np.array_equal(t.rows, rows[:MAX_ROWS])
        assert t.protein_id == "p"

    def test_short_input_returned_unchanged(self):
        h = HiddenSet(rows=np.ones((3, 2), dtype=np.float32), protein_id="p")
        assert truncate_rows(h) is h

    def test_mask_truncated_alongside_rows(self):
        rows = np.ones((6, 2), dtype=np.float32)
        mask = np.array([True, False, True, True, False, True])
        h = HiddenSet(rows=rows, protein_id="p", mask=mask)
        t = truncate_rows(h, max_len=4)
        assert np.array_equal(t.mask, mask[:4])
        assert t.n_valid == 3
