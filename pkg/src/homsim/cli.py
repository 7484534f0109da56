"""Command line interface.

Subcommands: ``train``, ``search``, ``eval``, ``simmap``. Exit codes follow
one convention everywhere: 0 success, 2 usage or configuration error
(reported before any data is read), 3 data or I/O error. stdout carries
only data (rankings, reports, CSV); all logging goes to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import EmbeddingSet, normalize_hidden, project, truncate_rows
from .errors import EngineError, ParseError
from .evaluation import evaluate
from .formats import (
    DatabaseManifest,
    load_manifest,
    read_fasta,
    read_head_file,
    read_hidden_file,
    write_head_file,
)
from .scoring import (
    MaxSimScorer,
    PooledScorer,
    similarity_map,
    write_similarity_csv,
)
from .minhash import MinHashScorer
from .training import TrainConfig, TrainPair, train_projection

log = logging.getLogger("homsim")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    """Bad flags or configuration; reported before any data is touched."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homsim",
        description="Residue-level protein homolog search and training.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a projection head on pairs")
    p_train.add_argument("--pairs", required=True, help="TSV: anchor_id, positive_id, group")
    p_train.add_argument("--hidden", required=True, help="hidden-set file backing the pair ids")
    p_train.add_argument("--out-head", required=True, help="checkpoint output path")
    p_train.add_argument("--out-log", default=None, help="training log path (default: <out-head>.log)")
    p_train.add_argument("--batch-size", type=int, default=16)
    p_train.add_argument("--epochs", type=int, default=3)
    p_train.add_argument("--lr", type=float, default=2e-5)
    p_train.add_argument("--tau", type=float, default=1.0)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--d-out", type=int, default=128)
    p_train.add_argument("--warmup-frac", type=float, default=0.1)
    p_train.add_argument("--weight-decay", type=float, default=0.01)
    p_train.add_argument("--grad-clip-norm", type=float, default=1.0)

    p_search = sub.add_parser("search", help="rank database entries against a query")
    p_search.add_argument("--db", required=True, help="database manifest JSON")
    p_search.add_argument("--head", default=None, help="projection head (omit for frozen mode)")
    p_search.add_argument("--query-id", default=None, help="query an entry already in the database")
    p_search.add_argument("--query-fasta", default=None, help="FASTA holding one external query")
    p_search.add_argument("--hidden", default=None, help="hidden-set file holding the external query rows")
    p_search.add_argument("--scorer", choices=("maxsim", "pooled", "minhash"), default="maxsim")
    p_search.add_argument("--k", type=int, default=10)
    p_search.add_argument("--seed", type=int, default=0, help="k-mer hashing scheme seed")
    p_search.add_argument("--threads", type=int, default=1)

    p_eval = sub.add_parser("eval", help="leave-one-out capped recall over a database")
    p_eval.add_argument("--db", required=True)
    p_eval.add_argument("--head", default=None)
    p_eval.add_argument("--scorer", choices=("maxsim", "pooled", "minhash"), default="maxsim")
    p_eval.add_argument("--ks", default="1,10,100", help="comma-separated depths")
    p_eval.add_argument("--out-report", default=None, help="base path; writes <base>.jsonl and <base>.txt")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--threads", type=int, default=1)

    p_map = sub.add_parser("simmap", help="residue similarity matrix for one pair")
    p_map.add_argument("--db", required=True)
    p_map.add_argument("--head", default=None)
    p_map.add_argument("--query-id", required=True)
    p_map.add_argument("--cand-id", required=True)
    p_map.add_argument("--out-csv", default=None, help="output path (default: stdout)")
    return parser


def _validate_train_args(args) -> None:
    if args.batch_size < 2:
        raise UsageError("--batch-size must be >= 2 (in-batch negatives)")
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    if args.lr <= 0:
        raise UsageError("--lr must be > 0")
    if args.tau <= 0:
        raise UsageError("--tau must be > 0")
    if args.d_out < 1:
        raise UsageError("--d-out must be >= 1")
    if not 0.0 <= args.warmup_frac < 1.0:
        raise UsageError("--warmup-frac must be in [0, 1)")
    if args.weight_decay < 0:
        raise UsageError("--weight-decay must be >= 0")
    if args.grad_clip_norm <= 0:
        raise UsageError("--grad-clip-norm must be > 0")


def _read_pairs_tsv(path: str) -> list[tuple[str, str, str]]:
    rows: list[tuple[str, str, str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not all(parts):
                raise ParseError(
                    f"expected 'anchor<TAB>positive<TAB>group', got {line!r}", lineno
                )
            rows.append((parts[0], parts[1], parts[2]))
    return rows


def _scoring_sets(manifest: DatabaseManifest, head_path: str | None) -> list[EmbeddingSet]:
    """Hidden sets -> truncate -> project (or normalize in frozen mode)."""
    head = read_head_file(head_path) if head_path else None
    wanted = set(manifest.record_ids())
    sets = []
    for h in read_hidden_file(manifest.embedding_file):
        if h.protein_id not in wanted:
            continue
        h = truncate_rows(h)
        sets.append(project(h, head) if head else normalize_hidden(h))
    return sets


def _cmd_train(args) -> int:
    _validate_train_args(args)
    hidden = {h.protein_id: truncate_rows(h) for h in read_hidden_file(args.hidden)}
    pairs = []
    for anchor_id, positive_id, group in _read_pairs_tsv(args.pairs):
        try:
            anchor, positive = hidden[anchor_id], hidden[positive_id]
        except KeyError as exc:
            raise EngineError(f"pair references unknown protein id {exc}") from exc
        pairs.append(TrainPair(anchor=anchor, positive=positive, group=group))
    cfg = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        peak_lr=args.lr,
        warmup_frac=args.warmup_frac,
        weight_decay=args.weight_decay,
        grad_clip_norm=args.grad_clip_norm,
        tau=args.tau,
        seed=args.seed,
        d_out=args.d_out,
    )
    log_path = args.out_log or args.out_head + ".log"
    with open(log_path, "w", encoding="utf-8") as log_file:
        head = train_projection(pairs, cfg, log_file=log_file)
    write_head_file(head, args.out_head)
    log.info("wrote head %s (%d x %d) and log %s", args.out_head, head.d_out, head.h_in, log_path)
    return EXIT_OK


def _build_scorer(args, manifest: DatabaseManifest):
    if args.scorer == "minhash":
        return MinHashScorer(manifest.sequences(), seed=args.seed)
    sets = _scoring_sets(manifest, args.head)
    return MaxSimScorer(sets) if args.scorer == "maxsim" else PooledScorer(sets)


def _query_payload(args, manifest: DatabaseManifest):
    """Resolve the query for cmd_search: in-database id or external files."""
    if (args.query_id is None) == (args.query_fasta is None):
        raise UsageError("give exactly one of --query-id or --query-fasta")
    if args.scorer == "minhash":
        if args.query_id is not None:
            seqs = manifest.sequences()
            if args.query_id not in seqs:
                raise EngineError(f"unknown query id {args.query_id!r}")
            return (args.query_id, seqs[args.query_id])
        entries = read_fasta(args.query_fasta)
        return (entries[0][0], entries[0][1])

    head = read_head_file(args.head) if args.head else None
    if args.query_id is not None:
        for h in read_hidden_file(manifest.embedding_file):
            if h.protein_id == args.query_id:
                h = truncate_rows(h)
                return project(h, head) if head else normalize_hidden(h)
        raise EngineError(f"unknown query id {args.query_id!r}")
    if args.hidden is None:
        raise UsageError("--query-fasta needs --hidden for embedding scorers")
    qid = read_fasta(args.query_fasta)[0][0]
    for h in read_hidden_file(args.hidden):
        if h.protein_id == qid:
            h = truncate_rows(h)
            return project(h, head) if head else normalize_hidden(h)
    raise EngineError(f"query id {qid!r} not found in {args.hidden}")


def _cmd_search(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    manifest = load_manifest(args.db)
    scorer = _build_scorer(args, manifest)
    query = _query_payload(args, manifest)
    hits = scorer.rank(query, k=args.k)
    for rank, (pid, score) in enumerate(hits, start=1):
        sys.stdout.write(f"{rank}\t{pid}\t{score:.6f}\n")
    return EXIT_OK


def _cmd_eval(args) -> int:
    try:
        ks = [int(tok) for tok in args.ks.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"--ks must be comma-separated integers: {exc}")
    if not ks or min(ks) < 1:
        raise UsageError("--ks depths must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    manifest = load_manifest(args.db)
    scorer = _build_scorer(args, manifest)
    if args.scorer == "minhash":
        queries = [(pid, (pid, seq)) for pid, seq in manifest.sequences().items()]
    else:
        sets = _scoring_sets(manifest, args.head)
        queries = [(s.protein_id, s) for s in sets]
    report = evaluate(scorer, queries, manifest.groups(), ks=ks, threads=args.threads)
    if args.out_report:
        with open(args.out_report + ".jsonl", "w", encoding="utf-8") as f:
            report.write_jsonl(f)
        with open(args.out_report + ".txt", "w", encoding="utf-8") as f:
            report.write_table(f)
    report.write_table(sys.stdout)
    return EXIT_OK


def _cmd_simmap(args) -> int:
    manifest = load_manifest(args.db)
    sets = {s.protein_id: s for s in _scoring_sets(manifest, args.head)}
    try:
        q, d = sets[args.query_id], sets[args.cand_id]
    except KeyError as exc:
        raise EngineError(f"unknown protein id {exc}") from exc
    sm = similarity_map(q, d)
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as f:
            write_similarity_csv(sm, f)
    else:
        write_similarity_csv(sm, sys.stdout)
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "search": _cmd_search,
    "eval": _cmd_eval,
    "simmap": _cmd_simmap,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
