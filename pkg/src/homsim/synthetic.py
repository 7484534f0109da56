"""Synthetic motif databases for end-to-end checks and benchmarks.

Each group shares a planted motif: a group-specific pattern occupying a
small block of coordinates, repeated with per-protein jitter at a random
row offset inside every member. Rows outside the motif window are filler
carrying high-norm junk patterns that recur across all groups (think
low-complexity segments), and every row carries i.i.d. nuisance
coordinates whose variance dwarfs the motif.

This layout makes the engine's claims testable end to end:

* scoring raw normalized rows is mediocre, because junk matches outscore
  motif matches once nuisance noise dominates the row norms;
* contrastive training sees a consistent gradient (grow the signal block,
  shrink the nuisance block) since positives agree exactly there and
  in-batch negatives do not;
* pooled vectors are dominated by the junk mean that every protein shares,
  so the uni-vector baseline stays poor no matter how good the head gets,
  while residue-level scoring recovers the motif.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import HiddenSet


def make_motif_groups(
    n_groups: int,
    proteins_per_group: int | Sequence[int],
    *,
    hidden_dim: int = 32,
    signal_dim: int = 8,
    junk_dim: int = 8,
    n_junk_patterns: int = 1,
    motif_len: int = 8,
    n_rows: int = 10,
    motif_scale: float = 1.0,
    junk_scale: float = 6.0,
    jitter_scale: float = 0.05,
    noise_scale: float = 0.3,
    nuisance_scale: float = 2.0,
    seed: int = 0,
    group_prefix: str = "fam",
) -> dict[str, list[HiddenSet]]:
    """Generate motif-sharing hidden sets, one list per group.

    Coordinate layout per row: [0, signal_dim) carries group identity inside
    the motif window, [signal_dim, signal_dim + junk_dim) carries pool junk
    on filler rows, and the rest is nuisance everywhere. ``noise_scale``
    fills the off-role blocks so no row is ever degenerate.

    ``proteins_per_group`` is either one size for all groups or one size per
    group, so training splits can use large groups while held-out splits
    stay small enough for fast ranking. Fully seeded and repeatable.
    """
    if signal_dim + junk_dim >= hidden_dim:
        raise ValueError("signal_dim + junk_dim must be smaller than hidden_dim")
    if not 1 <= motif_len <= n_rows:
        raise ValueError("motif must fit into the protein")
    if n_junk_patterns < 1:
        raise ValueError("need at least one junk pattern")
    if isinstance(proteins_per_group, int):
        sizes = [proteins_per_group] * n_groups
    else:
        sizes = list(proteins_per_group)
        if len(sizes) != n_groups:
            raise ValueError("need one group size per group")

    rng = np.random.default_rng(seed)
    nuisance_dim = hidden_dim - signal_dim - junk_dim
    junk_pool = rng.normal(0.0, junk_scale, size=(n_junk_patterns, junk_dim))
    row_pos = np.arange(n_rows)

    out: dict[str, list[HiddenSet]] = {}
    for g in range(n_groups):
        group = f"{group_prefix}{g:03d}"
        n = sizes[g]
        pattern = rng.normal(0.0, motif_scale, size=(motif_len, signal_dim))

        signal = rng.normal(0.0, noise_scale, size=(n, n_rows, signal_dim))
        junk = rng.normal(0.0, noise_scale, size=(n, n_rows, junk_dim))
        offsets = rng.integers(0, n_rows - motif_len + 1, size=n)
        jitter = rng.normal(0.0, jitter_scale, size=(n, n_rows, signal_dim))
        picks = rng.integers(0, n_junk_patterns, size=(n, n_rows))
        junk_jitter = rng.normal(0.0, jitter_scale, size=(n, n_rows, junk_dim))
        nuisance = rng.normal(0.0, nuisance_scale, size=(n, n_rows, nuisance_dim))

        in_motif = (row_pos[None, :] >= offsets[:, None]) & (
            row_pos[None, :] < (offsets + motif_len)[:, None]
        )
        pattern_row = (row_pos[None, :] - offsets[:, None]) % motif_len
        signal = np.where(
            in_motif[:, :, None], pattern[pattern_row] + jitter, signal
        )
        junk = np.where(
            in_motif[:, :, None], junk, junk_pool[picks] + junk_jitter
        )

        rows = np.concatenate([signal, junk, nuisance], axis=2).astype(np.float32)
        out[group] = [
            HiddenSet(rows=rows[p], protein_id=f"{group}_p{p:05d}") for p in range(n)
        ]
    return out


def flatten_groups(
    sets_by_group: dict[str, list[HiddenSet]]
) -> tuple[list[HiddenSet], dict[str, str]]:
    """All sets in deterministic order plus the id -> group map."""
    sets: list[HiddenSet] = []
    groups: dict[str, str] = {}
    for group in sorted(sets_by_group):
        for s in sorted(sets_by_group[group], key=lambda x: x.protein_id):
            sets.append(s)
            groups[s.protein_id] = group
    return sets, groups
