"""Contrastive training of the projection head.

A batch of (anchor, positive) pairs yields a B x B late-interaction score
matrix S. The loss is the symmetric InfoNCE

    L = 0.5 * [CE(S/tau, y) + CE(S^T/tau, y)],  y_i = i,

with every non-matching pair in the batch acting as a negative (accidental
same-group collisions are kept; they only soften the objective). Gradients
flow through the score's argmax selections (subgradient: only the selected
candidate row receives signal; ties resolve to the lowest index) and through
the row normalization, all in f64. Weights are stored f32 only on save.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np

from .core import HiddenSet, ProjectionHead
from .errors import (
    DimensionMismatchError,
    InsufficientPairsError,
    NonFiniteError,
    ZeroNormRowError,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LR_FLOOR_DIV = 1e4


@dataclass(frozen=True)
class TrainPair:
    """An anchor and a positive drawn from the same group."""

    anchor: HiddenSet
    positive: HiddenSet
    group: str

    def __post_init__(self):
        if self.anchor.row_dim != self.positive.row_dim:
            raise DimensionMismatchError(
                f"pair {self.anchor.protein_id!r}/{self.positive.protein_id!r}: "
                f"hidden dims {self.anchor.row_dim} vs {self.positive.row_dim}"
            )
        if self.anchor.n_valid == 0 or self.positive.n_valid == 0:
            raise ValueError("train pair members must have at least one valid row")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults follow the reference training recipe."""

    batch_size: int = 16
    epochs: int = 3
    peak_lr: float = 2e-5
    warmup_frac: float = 0.1
    weight_decay: float = 0.01
    grad_clip_norm: float = 1.0
    tau: float = 1.0
    seed: int = 0
    d_out: int = 128

    def validated(self) -> "TrainConfig":
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.peak_lr <= 0:
            raise ValueError("peak_lr must be > 0")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ValueError("warmup_frac must be in [0, 1)")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be > 0")
        if self.d_out < 1:
            raise ValueError("d_out must be >= 1")
        return self


def init_weights(d_out: int, h_in: int, seed: int) -> np.ndarray:
    """Seeded i.i.d. uniform init on +/- sqrt(6/(h_in + d_out)), f64."""
    rng = np.random.default_rng(seed)
    bound = math.sqrt(6.0 / (h_in + d_out))
    return rng.uniform(-bound, bound, size=(d_out, h_in))


def onecycle_lr(
    step: int, total_steps: int, peak_lr: float, warmup_frac: float = 0.1
) -> float:
    """One-cycle schedule: linear ramp to the peak, cosine decay to peak/1e4.

    The first step already uses peak/warmup_steps (not zero) so step 0 makes
    progress; the apex lands on the last warmup step; the final step lands
    exactly on the floor.
    """
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    warmup = max(1, int(round(warmup_frac * total_steps)))
    if step < warmup:
        return peak_lr * (step + 1) / warmup
    floor = peak_lr / LR_FLOOR_DIV
    progress = (step - warmup + 1) / (total_steps - warmup)
    return floor + (peak_lr - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))


def _softmax_stats(z: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Log-sum-exp (shift-stabilized) and softmax along an axis."""
    m = z.max(axis=axis, keepdims=True)
    e = np.exp(z - m)
    total = e.sum(axis=axis, keepdims=True)
    return (np.log(total) + m).squeeze(axis=axis), e / total


def infonce_loss(scores, tau: float = 1.0) -> float:
    """Symmetric InfoNCE over a square score matrix with diagonal targets."""
    values = scores.values if hasattr(scores, "values") else np.asarray(scores)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("infonce_loss expects a square score matrix")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z = values / tau
    diag = np.diag(z)
    lse_rows, _ = _softmax_stats(z, axis=1)
    lse_cols, _ = _softmax_stats(z, axis=0)
    return float(0.5 * ((lse_rows - diag).mean() + (lse_cols - diag).mean()))


def _project_rows_f64(
    rows: np.ndarray, w: np.ndarray, who: str
) -> tuple[np.ndarray, np.ndarray]:
    """Project and normalize valid rows in f64; returns (radii, unit rows)."""
    u = rows.astype(np.float64) @ w.T
    r = np.linalg.norm(u, axis=1)
    low = np.nonzero(r < 1e-12)[0]
    if low.size:
        raise ZeroNormRowError(int(low[0]), who)
    return r, u / r[:, None]


def _pad_stack(
    mats: list[np.ndarray], width: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stack variable-length row blocks into (B, T_max, width) plus a mask."""
    b = len(mats)
    t_max = max(m.shape[0] for m in mats)
    out = np.zeros((b, t_max, width), dtype=np.float64)
    mask = np.zeros((b, t_max), dtype=bool)
    for i, m in enumerate(mats):
        out[i, : m.shape[0]] = m
        mask[i, : m.shape[0]] = True
    return out, mask


def infonce_grad_w(
    batch: Sequence[TrainPair], w: np.ndarray, tau: float = 1.0
) -> tuple[float, np.ndarray]:
    """Loss and its analytic gradient w.r.t. the projection weights.

    Chain rule: dL/dS through the two softmax-CE terms, argmax subgradient
    through each score's selected candidate rows, then the normalization
    Jacobian (g - (e.g)e)/r back onto the raw hidden rows. All f64, batched
    over padded row tensors so a step costs a handful of BLAS calls.
    """
    b = len(batch)
    if b < 2:
        raise InsufficientPairsError(
            f"need a batch of >= 2 pairs for in-batch negatives, got {b}"
        )
    w = np.asarray(w, dtype=np.float64)
    h_in = w.shape[1]
    d = w.shape[0]
    for p in batch:
        if p.anchor.row_dim != h_in:
            raise DimensionMismatchError(
                f"pair {p.anchor.protein_id!r}: hidden dim {p.anchor.row_dim} "
                f"vs head input {h_in}"
            )

    anc_proj = [
        _project_rows_f64(p.anchor.valid_rows(), w, "anchor projection") for p in batch
    ]
    pos_proj = [
        _project_rows_f64(p.positive.valid_rows(), w, "positive projection")
        for p in batch
    ]
    xa, mask_a = _pad_stack([p.anchor.valid_rows() for p in batch], h_in)
    xp, mask_p = _pad_stack([p.positive.valid_rows() for p in batch], h_in)
    ea, _ = _pad_stack([e for _, e in anc_proj], d)
    ep, _ = _pad_stack([e for _, e in pos_proj], d)
    ta, tp = ea.shape[1], ep.shape[1]
    ra = np.ones((b, ta))
    rp = np.ones((b, tp))
    for i, (r, _) in enumerate(anc_proj):
        ra[i, : r.shape[0]] = r
    for j, (r, _) in enumerate(pos_proj):
        rp[j, : r.shape[0]] = r

    # sims[i, j, a, p] with padded candidate rows pushed to -inf
    sims = (ea.reshape(b * ta, d) @ ep.reshape(b * tp, d).T).reshape(b, ta, b, tp)
    sims = sims.transpose(0, 2, 1, 3)
    sims = np.where(mask_p[None, :, None, :], sims, -np.inf)
    match = sims.argmax(axis=3)  # first occurrence = lowest index
    best = np.take_along_axis(sims, match[..., None], axis=3)[..., 0]
    scores = np.where(mask_a[:, None, :], best, 0.0).sum(axis=2)

    z = scores / tau
    diag = np.diag(z)
    lse_rows, p_rows = _softmax_stats(z, axis=1)
    lse_cols, p_cols = _softmax_stats(z, axis=0)
    loss = float(0.5 * ((lse_rows - diag).mean() + (lse_cols - diag).mean()))
    g_s = (p_rows + p_cols - 2.0 * np.eye(b)) / (2.0 * b * tau)

    # upstream gradients on the unit embeddings through the argmax picks
    j_idx = np.arange(b)[None, :, None]
    picked = ep[j_idx, match]  # (b, b, ta, d)
    g_ea = np.einsum("ij,ijad->iad", g_s, picked)
    g_ea[~mask_a] = 0.0
    contrib = g_s[:, :, None, None] * ea[:, None, :, :]
    g_ep = np.zeros((b * tp, d))
    flat = (j_idx * tp + match).reshape(-1)
    np.add.at(g_ep, flat, contrib.reshape(-1, d))
    g_ep = g_ep.reshape(b, tp, d)
    g_ep[~mask_p] = 0.0

    # through normalization, then onto W: dL/dW += ((g - (e.g)e)/r)^T @ rows
    coef_a = (g_ea - (g_ea * ea).sum(axis=2, keepdims=True) * ea) / ra[:, :, None]
    coef_p = (g_ep - (g_ep * ep).sum(axis=2, keepdims=True) * ep) / rp[:, :, None]
    grad = np.einsum("btd,bth->dh", coef_a, xa) + np.einsum("btd,bth->dh", coef_p, xp)
    return loss, grad


def sample_epoch_pairs(
    sets_by_group: dict[str, list[HiddenSet]], rng: np.random.Generator
) -> list[TrainPair]:
    """One positive per anchor, drawn without replacement within each group.

    Every member of a group with >= 2 proteins anchors exactly one pair per
    epoch, and every member serves as a positive at most once (a seeded
    permutation with self-matches swapped away). Singleton groups are skipped.
    """
    pairs: list[TrainPair] = []
    for group in sorted(sets_by_group):
        members = sorted(sets_by_group[group], key=lambda s: s.protein_id)
        n = len(members)
        if n < 2:
            continue
        perm = rng.permutation(n)
        for i in range(n):
            if perm[i] == i:
                nxt = (i + 1) % n
                perm[i], perm[nxt] = perm[nxt], perm[i]
        for i in range(n):
            pairs.append(
                TrainPair(anchor=members[i], positive=members[int(perm[i])], group=group)
            )
    return pairs


class _AdamW:
    """Decoupled weight decay Adam (torch formulation), f64 state."""

    def __init__(self, shape: tuple[int, int], weight_decay: float):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.wd = weight_decay

    def step(self, w: np.ndarray, grad: np.ndarray, lr: float) -> None:
        self.t += 1
        self.m = ADAM_BETA1 * self.m + (1.0 - ADAM_BETA1) * grad
        self.v = ADAM_BETA2 * self.v + (1.0 - ADAM_BETA2) * grad * grad
        m_hat = self.m / (1.0 - ADAM_BETA1**self.t)
        v_hat = self.v / (1.0 - ADAM_BETA2**self.t)
        w -= lr * (m_hat / (np.sqrt(v_hat) + ADAM_EPS) + self.wd * w)


def train_projection(
    pairs: Sequence[TrainPair],
    cfg: TrainConfig,
    log_file: TextIO | None = None,
    epoch_sampler: Callable[[int, np.random.Generator], list[TrainPair]] | None = None,
) -> ProjectionHead:
    """Train a head on (anchor, positive) pairs; fully seeded and repeatable.

    Pair order is reshuffled every epoch; when ``epoch_sampler`` is given it
    supplies each epoch's pair list instead (fresh positives per epoch).
    Ragged tail batches are dropped. Writes one ``step\\tlr\\tloss\\tgrad_norm``
    line per step to ``log_file`` when given; aborts with NonFiniteError
    (naming the step) if the loss or gradient leaves the finite range.
    """
    cfg = cfg.validated()
    if cfg.batch_size < 2:
        raise InsufficientPairsError("batch_size must be >= 2 for in-batch negatives")
    rng = np.random.default_rng(cfg.seed)

    epoch_lists: list[Sequence[TrainPair]] = []
    for epoch in range(cfg.epochs):
        plist = epoch_sampler(epoch, rng) if epoch_sampler else pairs
        if len(plist) < cfg.batch_size:
            raise InsufficientPairsError(
                f"epoch {epoch}: {len(plist)} pairs < batch_size {cfg.batch_size}"
            )
        epoch_lists.append(plist)

    h_in = epoch_lists[0][0].anchor.row_dim
    w = init_weights(cfg.d_out, h_in, cfg.seed)
    opt = _AdamW(w.shape, cfg.weight_decay)
    steps_per_epoch = [len(pl) // cfg.batch_size for pl in epoch_lists]
    total_steps = sum(steps_per_epoch)

    step = 0
    for epoch, plist in enumerate(epoch_lists):
        order = rng.permutation(len(plist))
        for s in range(steps_per_epoch[epoch]):
            batch = [plist[int(i)] for i in order[s * cfg.batch_size : (s + 1) * cfg.batch_size]]
            lr = onecycle_lr(step, total_steps, cfg.peak_lr, cfg.warmup_frac)
            loss, grad = infonce_grad_w(batch, w, cfg.tau)
            if not math.isfinite(loss) or not np.isfinite(grad).all():
                raise NonFiniteError(f"non-finite loss or gradient at step {step}")
            g_norm = float(np.linalg.norm(grad))
            if g_norm > cfg.grad_clip_norm:
                grad = grad * (cfg.grad_clip_norm / g_norm)
            opt.step(w, grad, lr)
            if not np.isfinite(w).all():
                raise NonFiniteError(f"non-finite weights after step {step}")
            if log_file is not None:
                log_file.write(f"{step}\t{lr:.8e}\t{loss:.8e}\t{g_norm:.8e}\n")
            step += 1
    return ProjectionHead(weights=w.astype(np.float32))
