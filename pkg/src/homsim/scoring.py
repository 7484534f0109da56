"""Set-vs-set scoring: late-interaction MaxSim, pooled cosine, ranking.

The primary score sums, over query residues, the best dot product against
any candidate residue. It is asymmetric by construction; raw sums are kept
(no length normalization) so longer queries can reach higher totals.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import EmbeddingSet
from .errors import (
    DimensionMismatchError,
    EmptyDatabaseError,
    EmptySetError,
    ZeroNormRowError,
)
from .kernels import (
    maxsim_many_kernel,
    maxsim_pair_kernel,
    sim_matrix_kernel,
    tree_sum_f32_numpy,
)

SIM_BOUND_TOL = 1e-5


@dataclass(frozen=True)
class ScoreMatrix:
    """All-pairs MaxSim scores: values[i, j] = maxsim(rows[i], cols[j])."""

    values: np.ndarray
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float32, copy=True)
        if v.ndim != 2 or v.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError("ScoreMatrix shape does not match id lists")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "col_ids", tuple(self.col_ids))


@dataclass(frozen=True)
class SimilarityMap:
    """Residue-by-residue cosine matrix between two proteins (valid rows only).

    ``query_positions`` / ``cand_positions`` give the original row index of
    each matrix row / column, so padded rows never appear here.
    """

    values: np.ndarray
    query_id: str
    cand_id: str
    query_positions: tuple[int, ...]
    cand_positions: tuple[int, ...]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float32, copy=True)
        if v.ndim != 2:
            raise ValueError("SimilarityMap.values must be 2-D")
        if v.size and (v.min() < -1.0 - SIM_BOUND_TOL or v.max() > 1.0 + SIM_BOUND_TOL):
            raise ValueError("SimilarityMap values outside [-1, 1] tolerance band")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def _check_pair(q: EmbeddingSet, d: EmbeddingSet) -> None:
    if q.n_valid == 0:
        raise EmptySetError(f"query {q.protein_id!r} has no valid rows")
    if d.n_valid == 0:
        raise EmptySetError(f"candidate {d.protein_id!r} has no valid rows")
    if q.dim != d.dim:
        raise DimensionMismatchError(
            f"embedding dims differ: {q.dim} vs {d.dim}"
        )


def maxsim(q: EmbeddingSet, d: EmbeddingSet) -> float:
    """Late-interaction score of query q against candidate d.

    For every valid query row, take the maximum dot product over valid
    candidate rows, then sum in f32 with pairwise summation. Bounded above
    by the number of valid query rows (unit vectors).
    """
    _check_pair(q, d)
    return maxsim_pair_kernel(q.valid_rows(), d.valid_rows())


def maxsim_asymmetry_check(a: EmbeddingSet, b: EmbeddingSet) -> tuple[float, float]:
    """Both orientations of the asymmetric score, query-side first."""
    return maxsim(a, b), maxsim(b, a)


def score_matrix(
    rows: Sequence[EmbeddingSet], cols: Sequence[EmbeddingSet]
) -> ScoreMatrix:
    """MaxSim of every row set against every column set.

    Each cell goes through the same kernel as a standalone ``maxsim`` call,
    so the matrix matches per-pair scoring exactly regardless of schedule.
    """
    values = np.empty((len(rows), len(cols)), dtype=np.float32)
    for i, q in enumerate(rows):
        for j, d in enumerate(cols):
            values[i, j] = maxsim(q, d)
    return ScoreMatrix(
        values=values,
        row_ids=tuple(s.protein_id for s in rows),
        col_ids=tuple(s.protein_id for s in cols),
    )


def pooled_vector(s: EmbeddingSet) -> np.ndarray:
    """Masked mean of valid rows, L2-normalized, in f64."""
    if s.n_valid == 0:
        raise EmptySetError(f"{s.protein_id!r} has no valid rows")
    mean = s.valid_rows().astype(np.float64).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < 1e-12:
        raise ZeroNormRowError(0, f"mean_pool({s.protein_id!r})")
    return mean / norm


def mean_pool_cosine(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Cosine between the two pooled (mean, then normalized) vectors."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"embedding dims differ: {a.dim} vs {b.dim}")
    return float(pooled_vector(a) @ pooled_vector(b))


def similarity_map(q: EmbeddingSet, d: EmbeddingSet) -> SimilarityMap:
    """Residue-level cosine matrix whose row maxima recover the MaxSim score."""
    _check_pair(q, d)
    values = sim_matrix_kernel(q.valid_rows(), d.valid_rows())
    return SimilarityMap(
        values=values,
        query_id=q.protein_id,
        cand_id=d.protein_id,
        query_positions=tuple(int(i) for i in np.nonzero(q.mask)[0]),
        cand_positions=tuple(int(i) for i in np.nonzero(d.mask)[0]),
    )


def similarity_map_score(sm: SimilarityMap) -> float:
    """Sum of row maxima of a similarity map (f32 pairwise, as in maxsim)."""
    best = sm.values.max(axis=1).astype(np.float32)
    return float(tree_sum_f32_numpy(best))


def write_similarity_csv(sm: SimilarityMap, out: io.TextIOBase) -> None:
    """Row-major CSV with a header row/column of residue indices."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([""] + [str(p) for p in sm.cand_positions])
    for i, qpos in enumerate(sm.query_positions):
        writer.writerow([str(qpos)] + [f"{v:.8e}" for v in sm.values[i]])


class PackedEmbeddings:
    """Valid rows of many embedding sets packed for the batched kernel."""

    def __init__(self, sets: Sequence[EmbeddingSet]):
        if not sets:
            raise EmptyDatabaseError("no embedding sets to pack")
        dims = {s.dim for s in sets}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed embedding dims in database: {dims}")
        for s in sets:
            if s.n_valid == 0:
                raise EmptySetError(f"{s.protein_id!r} has no valid rows")
        self.ids: list[str] = [s.protein_id for s in sets]
        self.dim = dims.pop()
        counts = np.array([s.n_valid for s in sets], dtype=np.int64)
        self.offsets = np.zeros(len(sets) + 1, dtype=np.int64)
        np.cumsum(counts, out=self.offsets[1:])
        self.flat = np.concatenate([s.valid_rows() for s in sets]).astype(
            np.float32, copy=False
        )

    def __len__(self) -> int:
        return len(self.ids)

    def scores_for(self, q: EmbeddingSet) -> np.ndarray:
        if q.n_valid == 0:
            raise EmptySetError(f"query {q.protein_id!r} has no valid rows")
        if q.dim != self.dim:
            raise DimensionMismatchError(
                f"query dim {q.dim} vs database dim {self.dim}"
            )
        return maxsim_many_kernel(q.valid_rows(), self.flat, self.offsets)


def _order_hits(ids: Iterable[str], scores: Iterable[float]) -> list[tuple[str, float]]:
    """Descending score; ties broken by ascending id so ranking is total."""
    hits = [(pid, float(s)) for pid, s in zip(ids, scores)]
    hits.sort(key=lambda h: (-h[1], h[0]))
    return hits


def rank_candidates(
    query: EmbeddingSet,
    db: Sequence[EmbeddingSet] | PackedEmbeddings,
    k: int | None = None,
) -> list[tuple[str, float]]:
    """Rank database entries against a query by MaxSim, best first.

    An entry whose id equals the query's own id is excluded; raises
    EmptyDatabaseError when nothing remains.
    """
    packed = db if isinstance(db, PackedEmbeddings) else PackedEmbeddings(db)
    scores = packed.scores_for(query)
    hits = [
        (pid, float(s))
        for pid, s in zip(packed.ids, scores)
        if pid != query.protein_id
    ]
    if not hits:
        raise EmptyDatabaseError("no candidates besides the query itself")
    hits.sort(key=lambda h: (-h[1], h[0]))
    return hits if k is None else hits[:k]


class MaxSimScorer:
    """Ranks by the late-interaction score against a packed database."""

    name = "maxsim"

    def __init__(self, sets: Sequence[EmbeddingSet]):
        self._packed = PackedEmbeddings(sets)

    def rank(self, query: EmbeddingSet, k: int | None = None) -> list[tuple[str, float]]:
        return rank_candidates(query, self._packed, k)


class PooledScorer:
    """Uni-vector baseline: pooled unit vectors compared by cosine."""

    name = "pooled"

    def __init__(self, sets: Sequence[EmbeddingSet]):
        if not sets:
            raise EmptyDatabaseError("no embedding sets to pool")
        dims = {s.dim for s in sets}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed embedding dims in database: {dims}")
        self.ids = [s.protein_id for s in sets]
        self._matrix = np.stack([pooled_vector(s) for s in sets])

    def rank(self, query: EmbeddingSet, k: int | None = None) -> list[tuple[str, float]]:
        qv = pooled_vector(query)
        scores = self._matrix @ qv
        hits = [
            (pid, float(s))
            for pid, s in zip(self.ids, scores)
            if pid != query.protein_id
        ]
        if not hits:
            raise EmptyDatabaseError("no candidates besides the query itself")
        hits.sort(key=lambda h: (-h[1], h[0]))
        return hits if k is None else hits[:k]
