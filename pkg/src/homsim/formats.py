"""On-disk formats: row-set container, head checkpoint, signature file,
FASTA, label TSV, and the database manifest that ties them together.

All binary formats are little-endian with a 4-byte magic and fail loudly:
wrong magic, unknown version, duplicate ids, and mid-record EOF each have a
dedicated error. Round-trips are bit-exact.

Row-set container ("PCL1"):
    magic  4s   = PCL1
    u32         version (= 1)
    u32         record count
    per record: u16 id byte length, id UTF-8, u32 T, u32 D, T*D f32 row-major

Head checkpoint ("PCW1"):
    magic, u32 version (= 1), u32 H, u32 D, then the D x H f32 weight matrix
    row-major.

Signature file ("PCM1"):
    magic, u32 num_perm, u32 k, u64 scheme seed, then per record: u16 id
    byte length, id UTF-8, num_perm u64 minima. Records run to EOF.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .core import EmbeddingSet, HiddenSet, ProjectionHead, ProteinRecord
from .errors import (
    BadMagicError,
    DuplicateIdError,
    ManifestError,
    MissingLabelError,
    ParseError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .minhash import MinHashSignature

log = logging.getLogger("homsim")

ROWSET_MAGIC = b"PCL1"
HEAD_MAGIC = b"PCW1"
SIG_MAGIC = b"PCM1"
FORMAT_VERSION = 1


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"file ended while reading {what}")
    return data


def _check_magic(f: BinaryIO, expected: bytes) -> None:
    magic = f.read(4)
    if len(magic) < 4 or magic != expected:
        raise BadMagicError(
            f"expected magic {expected!r}, found {magic!r}"
        )


def _encode_id(protein_id: str) -> bytes:
    raw = protein_id.encode("utf-8")
    if not raw:
        raise ValueError("protein id must be non-empty")
    if len(raw) > 0xFFFF:
        raise ValueError(f"protein id too long ({len(raw)} bytes)")
    return raw


# ---------------------------------------------------------------------------
# row-set container (hidden sets and embedding sets share one layout)
# ---------------------------------------------------------------------------


def write_row_file(sets: Sequence[HiddenSet | EmbeddingSet], path: str | Path) -> None:
    """Write the valid rows of each set; padded rows never reach disk."""
    seen: set[str] = set()
    with open(path, "wb") as f:
        f.write(ROWSET_MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(sets)))
        for s in sets:
            if s.protein_id in seen:
                raise DuplicateIdError(f"duplicate protein id {s.protein_id!r}")
            seen.add(s.protein_id)
            rows = np.ascontiguousarray(s.valid_rows(), dtype="<f4")
            raw_id = _encode_id(s.protein_id)
            f.write(struct.pack("<H", len(raw_id)))
            f.write(raw_id)
            f.write(struct.pack("<II", rows.shape[0], rows.shape[1]))
            f.write(rows.tobytes(order="C"))


def _read_row_records(f: BinaryIO) -> list[tuple[str, np.ndarray]]:
    _check_magic(f, ROWSET_MAGIC)
    version, count = struct.unpack("<II", _read_exact(f, 8, "header"))
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"row-set file version {version}")
    out: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for _ in range(count):
        (id_len,) = struct.unpack("<H", _read_exact(f, 2, "id length"))
        pid = _read_exact(f, id_len, "protein id").decode("utf-8")
        if pid in seen:
            raise DuplicateIdError(f"duplicate protein id {pid!r}")
        seen.add(pid)
        n_rows, dim = struct.unpack("<II", _read_exact(f, 8, f"{pid} shape"))
        payload = _read_exact(f, n_rows * dim * 4, f"{pid} rows")
        rows = np.frombuffer(payload, dtype="<f4").reshape(n_rows, dim)
        out.append((pid, rows))
    return out


def read_hidden_file(path: str | Path) -> list[HiddenSet]:
    with open(path, "rb") as f:
        return [HiddenSet(rows=r, protein_id=pid) for pid, r in _read_row_records(f)]


def read_embedding_file(path: str | Path) -> list[EmbeddingSet]:
    """Read sets that must already be unit-normalized (e.g. pooled exports)."""
    with open(path, "rb") as f:
        return [
            EmbeddingSet(rows=r, protein_id=pid) for pid, r in _read_row_records(f)
        ]


def scan_row_file_ids(path: str | Path) -> list[str]:
    """Record ids only, skipping payloads; cheap manifest validation."""
    ids: list[str] = []
    seen: set[str] = set()
    size = Path(path).stat().st_size
    with open(path, "rb") as f:
        _check_magic(f, ROWSET_MAGIC)
        version, count = struct.unpack("<II", _read_exact(f, 8, "header"))
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"row-set file version {version}")
        for _ in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(f, 2, "id length"))
            pid = _read_exact(f, id_len, "protein id").decode("utf-8")
            if pid in seen:
                raise DuplicateIdError(f"duplicate protein id {pid!r}")
            seen.add(pid)
            ids.append(pid)
            n_rows, dim = struct.unpack("<II", _read_exact(f, 8, "shape"))
            need = n_rows * dim * 4
            if f.tell() + need > size:
                raise TruncatedFileError("file ended inside a row payload")
            f.seek(need, io.SEEK_CUR)
    return ids


# ---------------------------------------------------------------------------
# projection head checkpoint
# ---------------------------------------------------------------------------


def write_head_file(head: ProjectionHead, path: str | Path) -> None:
    with open(path, "wb") as f:
        f.write(HEAD_MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, head.h_in, head.d_out))
        f.write(np.ascontiguousarray(head.weights, dtype="<f4").tobytes(order="C"))


def read_head_file(path: str | Path) -> ProjectionHead:
    with open(path, "rb") as f:
        _check_magic(f, HEAD_MAGIC)
        version, h_in, d_out = struct.unpack("<III", _read_exact(f, 12, "head header"))
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"head file version {version}")
        payload = _read_exact(f, h_in * d_out * 4, "head weights")
        weights = np.frombuffer(payload, dtype="<f4").reshape(d_out, h_in)
        return ProjectionHead(weights=weights)


# ---------------------------------------------------------------------------
# minhash signature file
# ---------------------------------------------------------------------------


def write_signature_file(sigs: Sequence[MinHashSignature], path: str | Path) -> None:
    if not sigs:
        raise ValueError("nothing to write: empty signature list")
    k = sigs[0].k
    num_perm = sigs[0].num_perm
    seed = sigs[0].scheme_seed
    seen: set[str] = set()
    with open(path, "wb") as f:
        f.write(SIG_MAGIC)
        f.write(struct.pack("<IIQ", num_perm, k, seed))
        for sig in sigs:
            if (sig.k, sig.num_perm, sig.scheme_seed) != (k, num_perm, seed):
                raise ValueError("signature file requires a single scheme")
            if sig.protein_id in seen:
                raise DuplicateIdError(f"duplicate protein id {sig.protein_id!r}")
            seen.add(sig.protein_id)
            raw_id = _encode_id(sig.protein_id)
            f.write(struct.pack("<H", len(raw_id)))
            f.write(raw_id)
            f.write(np.ascontiguousarray(sig.mins, dtype="<u8").tobytes(order="C"))


def read_signature_file(path: str | Path) -> list[MinHashSignature]:
    out: list[MinHashSignature] = []
    seen: set[str] = set()
    with open(path, "rb") as f:
        _check_magic(f, SIG_MAGIC)
        num_perm, k, seed = struct.unpack("<IIQ", _read_exact(f, 16, "scheme header"))
        while True:
            head = f.read(2)
            if not head:
                break
            if len(head) < 2:
                raise TruncatedFileError("file ended inside an id length")
            (id_len,) = struct.unpack("<H", head)
            pid = _read_exact(f, id_len, "protein id").decode("utf-8")
            if pid in seen:
                raise DuplicateIdError(f"duplicate protein id {pid!r}")
            seen.add(pid)
            payload = _read_exact(f, num_perm * 8, f"{pid} minima")
            mins = np.frombuffer(payload, dtype="<u8")
            out.append(
                MinHashSignature(
                    mins=mins, k=k, num_perm=num_perm, scheme_seed=seed, protein_id=pid
                )
            )
    return out


# ---------------------------------------------------------------------------
# FASTA and labels
# ---------------------------------------------------------------------------


def read_fasta(path: str | Path) -> list[tuple[str, str]]:
    """(id, raw sequence) pairs; id is the header token up to whitespace.

    Multi-line bodies are concatenated. An empty body and sequence data
    before the first header are ParseErrors carrying the line number.
    """
    entries: list[tuple[str, str]] = []
    seen: set[str] = set()
    current_id: str | None = None
    current_line = 0
    chunks: list[str] = []

    def flush() -> None:
        if current_id is None:
            return
        seq = "".join(chunks)
        if not seq:
            raise ParseError(f"record {current_id!r} has an empty body", current_line)
        entries.append((current_id, seq))

    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                header = line[1:].strip()
                if not header:
                    raise ParseError("header with no id", lineno)
                pid = header.split()[0]
                if pid in seen:
                    raise DuplicateIdError(f"duplicate protein id {pid!r}")
                seen.add(pid)
                current_id = pid
                current_line = lineno
                chunks = []
            else:
                if current_id is None:
                    raise ParseError("sequence data before the first header", lineno)
                chunks.append(line)
    flush()
    return entries


def read_labels(path: str | Path) -> dict[str, str]:
    """Two-column TSV mapping protein id to group label."""
    labels: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(
                    f"expected 'id<TAB>group', got {line!r}", lineno
                )
            if parts[0] in labels:
                raise DuplicateIdError(f"duplicate label for id {parts[0]!r}")
            labels[parts[0]] = parts[1]
    return labels


def build_records(
    fasta_entries: Sequence[tuple[str, str]],
    labels: dict[str, str],
    strict: bool = True,
) -> list[ProteinRecord]:
    """Join sequences with group labels; strict mode requires full coverage."""
    records = []
    for pid, seq in fasta_entries:
        group = labels.get(pid)
        if group is None and strict:
            raise MissingLabelError(f"no group label for protein {pid!r}")
        records.append(ProteinRecord(id=pid, sequence=seq, group=group))
    return records


# ---------------------------------------------------------------------------
# database manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatabaseManifest:
    """A searchable database: records plus the files backing them."""

    records: tuple[ProteinRecord, ...]
    embedding_file: str
    label_file: str

    def record_ids(self) -> list[str]:
        return [r.id for r in self.records]

    def groups(self) -> dict[str, str]:
        return {r.id: r.group for r in self.records if r.group is not None}

    def sequences(self) -> dict[str, str]:
        return {r.id: r.sequence for r in self.records}


def load_manifest(path: str | Path, strict_labels: bool = True) -> DatabaseManifest:
    """Read a manifest JSON and validate id correspondence across its files.

    The JSON holds ``fasta``, ``labels`` and ``embeddings`` paths, resolved
    relative to the manifest's directory. Every record id must appear in the
    embedding file exactly once; embedding-only ids are ignored with a
    warning.
    """
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    missing = [key for key in ("fasta", "labels", "embeddings") if key not in spec]
    if missing:
        raise ManifestError(f"manifest {path} lacks keys: {', '.join(missing)}")

    base = path.parent
    fasta_path = base / spec["fasta"]
    label_path = base / spec["labels"]
    embed_path = base / spec["embeddings"]

    entries = read_fasta(fasta_path)
    labels = read_labels(label_path)
    records = build_records(entries, labels, strict=strict_labels)

    embedded = scan_row_file_ids(embed_path)
    embedded_set = set(embedded)
    absent = [r.id for r in records if r.id not in embedded_set]
    if absent:
        raise ManifestError(
            f"{len(absent)} record id(s) missing from the embedding file, "
            f"first: {absent[0]!r}"
        )
    extra = embedded_set - {r.id for r in records}
    if extra:
        log.warning(
            "embedding file has %d id(s) without records; they are unreachable",
            len(extra),
        )
    return DatabaseManifest(
        records=tuple(records),
        embedding_file=str(embed_path),
        label_file=str(label_path),
    )


def write_manifest(
    path: str | Path, fasta: str, labels: str, embeddings: str
) -> None:
    spec = {"fasta": fasta, "labels": labels, "embeddings": embeddings}
    Path(path).write_text(json.dumps(spec, indent=2) + "\n", encoding="utf-8")
