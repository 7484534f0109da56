"""Alignment-free k-mer baseline: MinHash sketches of 5-mer sets.

Each sequence is decomposed into overlapping k-mers (k=5). A signature keeps,
for each of 256 seeded universal-hash permutations, the minimum hash over the
sequence's k-mers:

    h_p(x) = (a_p * base64(x) + b_p) mod M,   M = 2^61 - 1

with a_p odd and base64 a fixed (unsalted) FNV-1a 64-bit hash of the k-mer
bytes reduced mod M. Estimated similarity between two sequences is the
fraction of signature positions that agree, an unbiased estimate of the
Jaccard similarity of their k-mer sets.

M is a Mersenne prime, so multiplication mod M reduces to 61-bit rotations
and folds; everything below stays inside u64 numpy arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemeMismatchError, TooShortError

KMER_SIZE = 5
NUM_PERMUTATIONS = 256
MERSENNE_61 = np.uint64((1 << 61) - 1)

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)

_MASK31 = np.uint64((1 << 31) - 1)
_MASK30 = np.uint64((1 << 30) - 1)


@dataclass(frozen=True)
class MinHashSignature:
    """Per-permutation minima for one sequence under a fixed scheme."""

    mins: np.ndarray
    k: int
    num_perm: int
    scheme_seed: int
    protein_id: str = ""

    def __post_init__(self):
        m = np.array(self.mins, dtype=np.uint64, copy=True)
        if m.shape != (self.num_perm,):
            raise ValueError(
                f"signature must hold {self.num_perm} values, got shape {m.shape}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "mins", m)


def kmer_set(sequence: str, k: int = KMER_SIZE) -> set[str]:
    """All overlapping k-mers of a sequence; TooShortError if len < k."""
    if len(sequence) < k:
        raise TooShortError(
            f"sequence of length {len(sequence)} is shorter than k={k}"
        )
    return {sequence[i : i + k] for i in range(len(sequence) - k + 1)}


def exact_jaccard(seq_a: str, seq_b: str, k: int = KMER_SIZE) -> float:
    """Brute-force Jaccard similarity of the two k-mer sets."""
    sa, sb = kmer_set(seq_a, k), kmer_set(seq_b, k)
    return len(sa & sb) / len(sa | sb)


def _fold61(v: np.ndarray) -> np.ndarray:
    """Reduce u64 values to [0, M) using 2^61 == 1 (mod M)."""
    v = (v >> np.uint64(61)) + (v & MERSENNE_61)
    v = (v >> np.uint64(61)) + (v & MERSENNE_61)
    return np.where(v >= MERSENNE_61, v - MERSENNE_61, v)


def _rot61(v: np.ndarray, k: int) -> np.ndarray:
    """(v * 2^k) mod M for v < M, as a k-bit rotation within 61 bits."""
    k64 = np.uint64(k)
    inv = np.uint64(61 - k)
    low_mask = np.uint64((1 << (61 - k)) - 1)
    return ((v & low_mask) << k64) | (v >> inv)


def _mulmod61(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    """(a * h) mod M with a, h < M, without leaving u64.

    Split both factors at bit 31; the four partial products each fit in u64
    and the power-of-two weights collapse through rotations (2^61 == 1).
    """
    a1, a0 = a >> np.uint64(31), a & _MASK31
    h1, h0 = h >> np.uint64(31), h & _MASK31
    t62 = _rot61(_fold61(a1 * h1), 1)  # 2^62 == 2 (mod M)
    mid = _rot61(_fold61(a1 * h0 + a0 * h1), 31)
    low = _fold61(a0 * h0)
    return _fold61(t62 + mid + low)


def _kmer_base_hashes(sequence: str, k: int) -> np.ndarray:
    """FNV-1a 64 of every k-mer window, reduced mod M. Shape (n_kmers,).

    FNV multiplies modulo 2^64 by design, so u64 wraparound is expected here.
    """
    with np.errstate(over="ignore"):
        data = np.frombuffer(sequence.encode("utf-8"), dtype=np.uint8)
        if data.shape[0] != len(sequence):
            # non-ascii sequences hash byte-wise over their UTF-8 encoding
            windows = [
                sequence[i : i + k].encode("utf-8")
                for i in range(len(sequence) - k + 1)
            ]
            out = np.empty(len(windows), dtype=np.uint64)
            for i, w in enumerate(windows):
                h = _FNV_OFFSET
                for byte in w:
                    h = (h ^ np.uint64(byte)) * _FNV_PRIME
                out[i] = h
            return _fold61(out)
        win = np.lib.stride_tricks.sliding_window_view(data, k).astype(np.uint64)
        h = np.full(win.shape[0], _FNV_OFFSET, dtype=np.uint64)
        for col in range(k):
            h = (h ^ win[:, col]) * _FNV_PRIME
        return _fold61(h)


def _scheme_params(seed: int, num_perm: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    half = int(MERSENNE_61) >> 1
    a = rng.integers(0, half, size=num_perm, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    b = rng.integers(0, int(MERSENNE_61), size=num_perm, dtype=np.uint64)
    return a, b


def minhash_signature(
    sequence: str,
    seed: int,
    k: int = KMER_SIZE,
    num_perm: int = NUM_PERMUTATIONS,
    protein_id: str = "",
) -> MinHashSignature:
    """Sketch a sequence's k-mer set; the sequence is consumed verbatim."""
    if len(sequence) < k:
        raise TooShortError(
            f"sequence of length {len(sequence)} is shorter than k={k}"
        )
    with np.errstate(over="ignore"):
        base = _kmer_base_hashes(sequence, k)
        a, b = _scheme_params(seed, num_perm)
        # (num_perm, n_kmers) hash table, then per-permutation minimum
        hashed = _fold61(_mulmod61(a[:, None], base[None, :]) + b[:, None])
        mins = hashed.min(axis=1)
    return MinHashSignature(
        mins=mins, k=k, num_perm=num_perm, scheme_seed=seed, protein_id=protein_id
    )


def minhash_similarity(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of matching signature positions (Jaccard estimate)."""
    if (a.k, a.num_perm, a.scheme_seed) != (b.k, b.num_perm, b.scheme_seed):
        raise SchemeMismatchError(
            f"signatures use different schemes: "
            f"(k={a.k}, perms={a.num_perm}, seed={a.scheme_seed}) vs "
            f"(k={b.k}, perms={b.num_perm}, seed={b.scheme_seed})"
        )
    return float(np.mean(a.mins == b.mins))


class MinHashScorer:
    """Ranks database sequences by estimated k-mer Jaccard similarity."""

    name = "minhash"

    def __init__(self, sequences: dict[str, str], seed: int = 0):
        self.seed = seed
        self._sigs = {
            pid: minhash_signature(seq, seed=seed, protein_id=pid)
            for pid, seq in sequences.items()
        }

    def rank(self, query, k: int | None = None) -> list[tuple[str, float]]:
        """Rank against a query given as (id, sequence) or a bare sequence."""
        if isinstance(query, tuple):
            qid, qseq = query
        else:
            qid, qseq = "", query
        qsig = (
            self._sigs[qid]
            if qid in self._sigs
            else minhash_signature(qseq, seed=self.seed, protein_id=qid)
        )
        hits = [
            (pid, minhash_similarity(qsig, sig))
            for pid, sig in self._sigs.items()
            if pid != qid
        ]
        hits.sort(key=lambda h: (-h[1], h[0]))
        return hits if k is None else hits[:k]
