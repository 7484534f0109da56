"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from homsim import AMINO_ACIDS, EmbeddingSet, HiddenSet


def unit_rows(rng: np.random.Generator, t: int, d: int) -> np.ndarray:
    """t random unit rows, normalized in f64 then cast to f32."""
    rows = rng.normal(size=(t, d))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def unit_set(
    rng: np.random.Generator,
    t: int,
    d: int,
    protein_id: str,
    n_pad: int = 0,
) -> EmbeddingSet:
    """An embedding set with t valid rows and n_pad masked junk rows at the end."""
    rows = unit_rows(rng, t, d)
    mask = np.ones(t, dtype=bool)
    if n_pad:
        pad = rng.normal(size=(n_pad, d)).astype(np.float32)
        rows = np.concatenate([rows, pad])
        mask = np.concatenate([mask, np.zeros(n_pad, dtype=bool)])
    return EmbeddingSet(rows=rows, protein_id=protein_id, mask=mask)


def hidden_set(
    rng: np.random.Generator, t: int, h: int, protein_id: str
) -> HiddenSet:
    return HiddenSet(
        rows=rng.normal(size=(t, h)).astype(np.float32), protein_id=protein_id
    )


def axis_set(axis: int, d: int, protein_id: str) -> EmbeddingSet:
    """Single-row set pointing along one coordinate axis."""
    row = np.zeros((1, d), dtype=np.float32)
    row[0, axis] = 1.0
    return EmbeddingSet(rows=row, protein_id=protein_id)


def random_sequence(rng: np.random.Generator, length: int) -> str:
    letters = np.array(list(AMINO_ACIDS))
    return "".join(rng.choice(letters, size=length))
