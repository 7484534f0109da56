"""Retrieval quality measurement: capped recall@k over leave-one-out queries.

Capped recall of a query q at depth k is

    cR@k(q) = |top-k hits that share q's group| / min(k, N_q)

where N_q counts q's group mates (q itself never appears among candidates).
The cap keeps small groups from being penalized at depths they cannot fill:
a query whose single group mate is ranked first scores 1 at every k.
Aggregates are unweighted means over queries with N_q >= 1; singleton-group
queries are skipped and reported separately.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

import numpy as np

from .core import ProteinRecord
from .errors import EngineError, NoRelevantError, TooFewGroupsError


class Scorer(Protocol):
    name: str

    def rank(self, query: Any, k: int | None = None) -> list[tuple[str, float]]: ...


def capped_recall_at_k(
    ranked_ids: Sequence[str], relevant: set[str], k: int
) -> float:
    """Fraction of the reachable relevant set retrieved in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise NoRelevantError("query has no relevant candidates")
    hits = sum(1 for pid in ranked_ids[:k] if pid in relevant)
    return hits / min(k, len(relevant))


@dataclass(frozen=True)
class EvalReport:
    """Per-query and aggregate capped recall for one scorer configuration."""

    scorer: str
    ks: tuple[int, ...]
    per_query: dict[str, dict[str, float]]
    aggregate: dict[int, float]
    n_queries: int
    skipped: tuple[str, ...]
    mean_query_ms: float

    def write_jsonl(self, out) -> None:
        """One object per query plus one trailing aggregate object."""
        for qid in sorted(self.per_query):
            entry = self.per_query[qid]
            rec = {
                "query_id": qid,
                "n_relevant": int(entry["n_relevant"]),
                "recall": {str(k): entry[f"cr@{k}"] for k in self.ks},
            }
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        agg = {
            "aggregate": True,
            "scorer": self.scorer,
            "n_queries": self.n_queries,
            "skipped": sorted(self.skipped),
            "mean_recall": {str(k): self.aggregate[k] for k in self.ks},
            "mean_query_ms": self.mean_query_ms,
        }
        out.write(json.dumps(agg, sort_keys=True) + "\n")

    def write_table(self, out) -> None:
        header = ["query", "n_rel"] + [f"cR@{k}" for k in self.ks]
        widths = [max(12, len(h)) for h in header]
        widths[0] = max(widths[0], *(len(q) for q in self.per_query)) if self.per_query else widths[0]
        line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
        out.write(line + "\n")
        out.write("-" * len(line) + "\n")
        for qid in sorted(self.per_query):
            entry = self.per_query[qid]
            cells = [qid, str(int(entry["n_relevant"]))] + [
                f"{entry[f'cr@{k}']:.4f}" for k in self.ks
            ]
            out.write("  ".join(c.ljust(w) for c, w in zip(cells, widths)) + "\n")
        out.write("-" * len(line) + "\n")
        cells = [f"mean ({self.n_queries} queries)", ""] + [
            f"{self.aggregate[k]:.4f}" for k in self.ks
        ]
        out.write("  ".join(c.ljust(w) for c, w in zip(cells, widths)) + "\n")
        if self.skipped:
            out.write(f"skipped (singleton group): {len(self.skipped)}\n")
        out.write(f"mean per-query scoring time: {self.mean_query_ms:.3f} ms\n")


def evaluate(
    scorer: Scorer,
    queries: Sequence[tuple[str, Any]],
    groups: dict[str, str],
    ks: Sequence[int] = (1, 10, 100),
    threads: int = 1,
) -> EvalReport:
    """Leave-one-out retrieval over every query; group mates are relevant.

    ``queries`` holds (query_id, payload) where the payload is whatever the
    scorer ranks with (an embedding set, or an (id, sequence) tuple). Workers
    only parallelize scoring; results are keyed by query id, so the report
    does not depend on the thread count. Scorer failures are re-raised
    annotated with the query id.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise ValueError("ks must contain positive depths")
    max_k = ks[-1]

    relevant_by_query: dict[str, set[str]] = {}
    skipped: list[str] = []
    jobs: list[tuple[str, Any]] = []
    for qid, payload in queries:
        group = groups.get(qid)
        relevant = (
            {pid for pid, g in groups.items() if g == group and pid != qid}
            if group is not None
            else set()
        )
        if not relevant:
            skipped.append(qid)
            continue
        relevant_by_query[qid] = relevant
        jobs.append((qid, payload))

    def run_query(job: tuple[str, Any]) -> tuple[str, dict[str, float], float]:
        qid, payload = job
        t0 = time.perf_counter()
        try:
            hits = scorer.rank(payload, k=max_k)
        except EngineError as exc:
            raise type(exc)(f"query {qid!r}: {exc}") from exc
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        ranked_ids = [pid for pid, _ in hits]
        relevant = relevant_by_query[qid]
        entry: dict[str, float] = {"n_relevant": float(len(relevant))}
        for k in ks:
            entry[f"cr@{k}"] = capped_recall_at_k(ranked_ids, relevant, k)
        return qid, entry, elapsed_ms

    per_query: dict[str, dict[str, float]] = {}
    times: list[float] = []
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for qid, entry, ms in pool.map(run_query, jobs):
                per_query[qid] = entry
                times.append(ms)
    else:
        for job in jobs:
            qid, entry, ms = run_query(job)
            per_query[qid] = entry
            times.append(ms)

    aggregate = {
        k: (
            float(np.mean([per_query[q][f"cr@{k}"] for q in per_query]))
            if per_query
            else 0.0
        )
        for k in ks
    }
    return EvalReport(
        scorer=scorer.name,
        ks=ks,
        per_query=per_query,
        aggregate=aggregate,
        n_queries=len(per_query),
        skipped=tuple(sorted(skipped)),
        mean_query_ms=float(np.mean(times)) if times else 0.0,
    )


def split_by_group(
    records: Sequence[ProteinRecord], test_frac: float, seed: int
) -> tuple[list[ProteinRecord], list[ProteinRecord]]:
    """Group-disjoint train/test split via a seeded shuffle of group names.

    Both sides always receive at least one group; raises TooFewGroupsError
    when fewer than two labeled groups exist.
    """
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must be in (0, 1)")
    names = sorted({r.group for r in records if r.group is not None})
    if len(names) < 2:
        raise TooFewGroupsError(f"need >= 2 labeled groups, found {len(names)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(names))
    n_test = min(max(int(round(test_frac * len(names))), 1), len(names) - 1)
    test_groups = {names[int(i)] for i in order[:n_test]}
    train = [r for r in records if r.group is not None and r.group not in test_groups]
    test = [r for r in records if r.group in test_groups]
    return train, test
