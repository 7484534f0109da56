"""Core value types and residue-level vector operations.

The engine represents a protein two ways:

* ``HiddenSet``   -- per-residue backbone vectors (T x H), any finite values.
* ``EmbeddingSet``-- per-residue unit vectors (T x D) ready for scoring.

A ``ProjectionHead`` maps one to the other; without a head the engine
normalizes hidden rows directly (the frozen mode used as a no-training
baseline). Both set types carry a boolean validity mask so padded rows can
ride along without affecting any score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    ZeroNormRowError,
)

log = logging.getLogger("homsim")

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
ALPHABET = frozenset(AMINO_ACIDS + "X")

MAX_ROWS = 256
ZERO_NORM_EPS = 1e-12
UNIT_NORM_TOL = 1e-4


def sanitize_sequence(seq: str, record_id: str = "?") -> str:
    """Uppercase a sequence and map letters outside the 20+X alphabet to X.

    The mapping is logged once per record; downstream k-mer hashing uses the
    sanitized sequence verbatim and performs no validation of its own.
    """
    seq = seq.upper()
    if all(c in ALPHABET for c in seq):
        return seq
    unknown = sorted({c for c in seq if c not in ALPHABET})
    log.warning(
        "record %s: mapping unknown letters %s to X", record_id, "".join(unknown)
    )
    return "".join(c if c in ALPHABET else "X" for c in seq)


@dataclass(frozen=True)
class ProteinRecord:
    """A named sequence with an optional group label."""

    id: str
    sequence: str
    group: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("protein id must be non-empty")
        object.__setattr__(
            self, "sequence", sanitize_sequence(self.sequence, self.id)
        )


def _prep_rows(rows, name: str) -> np.ndarray:
    arr = np.array(rows, dtype=np.float32, order="C", copy=True)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name}.rows must be a non-empty 2-D array")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name}.rows contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def _prep_mask(mask, n_rows: int, name: str) -> np.ndarray:
    if mask is None:
        m = np.ones(n_rows, dtype=bool)
    else:
        m = np.array(mask, dtype=bool, copy=True)
        if m.shape != (n_rows,):
            raise ValueError(f"{name}.mask must have shape ({n_rows},)")
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class HiddenSet:
    """Backbone residue vectors for one protein (rows: T x H, f32)."""

    rows: np.ndarray
    protein_id: str
    mask: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", _prep_rows(self.rows, "HiddenSet"))
        object.__setattr__(
            self, "mask", _prep_mask(self.mask, self.rows.shape[0], "HiddenSet")
        )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def row_dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    def valid_rows(self) -> np.ndarray:
        return self.rows[self.mask]


@dataclass(frozen=True)
class EmbeddingSet:
    """Unit-normalized residue vectors for one protein (rows: T x D, f32).

    Every masked-valid row must have L2 norm within 1e-4 of 1; padded rows
    are unconstrained and never contribute to a score.
    """

    rows: np.ndarray
    protein_id: str
    mask: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", _prep_rows(self.rows, "EmbeddingSet"))
        object.__setattr__(
            self, "mask", _prep_mask(self.mask, self.rows.shape[0], "EmbeddingSet")
        )
        valid = self.rows[self.mask]
        if valid.size:
            norms = np.linalg.norm(valid.astype(np.float64), axis=1)
            bad = np.nonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
            if bad.size:
                idx = int(np.nonzero(self.mask)[0][bad[0]])
                raise ValueError(
                    f"EmbeddingSet {self.protein_id!r}: row {idx} has norm "
                    f"{norms[bad[0]]:.6f}, expected 1 within {UNIT_NORM_TOL}"
                )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    def valid_rows(self) -> np.ndarray:
        return self.rows[self.mask]


@dataclass(frozen=True)
class ProjectionHead:
    """Linear map from backbone space (H) to scoring space (D).

    ``weights`` has shape (d_out, h_in); stored f32. Training accumulates in
    f64 and casts on save.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float32, order="C", copy=True)
        if w.ndim != 2 or 0 in w.shape:
            raise ValueError("ProjectionHead.weights must be a non-empty 2-D array")
        if not np.isfinite(w).all():
            raise NonFiniteError("ProjectionHead.weights contains NaN or Inf")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def d_out(self) -> int:
        return self.weights.shape[0]

    @property
    def h_in(self) -> int:
        return self.weights.shape[1]


def l2_normalize_rows(rows: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Return a copy of ``rows`` with every valid row scaled to unit L2 norm.

    Rows where ``mask`` is False are left untouched. Raises NonFiniteError on
    NaN/Inf input and ZeroNormRowError if a valid row's norm is below 1e-12.
    """
    arr = np.asarray(rows)
    if arr.ndim != 2:
        raise ValueError("l2_normalize_rows expects a 2-D array")
    if not np.isfinite(arr).all():
        raise NonFiniteError("l2_normalize_rows: input contains NaN or Inf")
    if mask is None:
        mask = np.ones(arr.shape[0], dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)

    norms = np.linalg.norm(arr.astype(np.float64, copy=False), axis=1)
    low = np.nonzero(mask & (norms < ZERO_NORM_EPS))[0]
    if low.size:
        raise ZeroNormRowError(int(low[0]), "l2_normalize_rows")
    scale = np.ones_like(norms)
    scale[mask] = 1.0 / norms[mask]
    return (arr.astype(np.float64, copy=False) * scale[:, None]).astype(arr.dtype)


def normalize_hidden(h: HiddenSet) -> EmbeddingSet:
    """Frozen-mode representation: normalize hidden rows directly (D = H)."""
    rows = l2_normalize_rows(h.rows, h.mask)
    return EmbeddingSet(rows=rows, protein_id=h.protein_id, mask=h.mask)


def project(h: HiddenSet, head: ProjectionHead) -> EmbeddingSet:
    """Apply the head to every valid row and normalize: e_t = W h_t / ||W h_t||.

    Output keeps the input's row count and mask. Raises DimensionMismatchError
    when ``h.row_dim != head.h_in`` and ZeroNormRowError if W maps a valid row
    to (near-)zero.
    """
    if h.row_dim != head.h_in:
        raise DimensionMismatchError(
            f"hidden rows have dim {h.row_dim}, head expects {head.h_in}"
        )
    projected = h.rows @ head.weights.T  # (T, D) f32
    norms = np.linalg.norm(projected.astype(np.float64), axis=1)
    low = np.nonzero(h.mask & (norms < ZERO_NORM_EPS))[0]
    if low.size:
        raise ZeroNormRowError(int(low[0]), f"project({h.protein_id!r})")
    scale = np.ones_like(norms)
    scale[h.mask] = 1.0 / norms[h.mask]
    rows = (projected.astype(np.float64) * scale[:, None]).astype(np.float32)
    return EmbeddingSet(rows=rows, protein_id=h.protein_id, mask=h.mask)


def truncate_sequence(seq: str, max_len: int = MAX_ROWS) -> str:
    return seq[:max_len]


def truncate_rows(s, max_len: int = MAX_ROWS):
    """Keep the first ``max_len`` rows of a HiddenSet or EmbeddingSet.

    Idempotent; returns the input object unchanged when already short enough.
    """
    if s.n_rows <= max_len:
        return s
    cls = type(s)
    return cls(
        rows=s.rows[:max_len],
        protein_id=s.protein_id,
        mask=s.mask[:max_len],
    )
