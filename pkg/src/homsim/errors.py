"""Exception types shared across the engine.

Every error raised on a contract violation derives from EngineError so the
CLI can map library failures to a data/IO exit code in one place.
"""


class EngineError(Exception):
    """Base class for all engine-level failures."""


class NonFiniteError(EngineError):
    """An array that must be finite contains NaN or Inf."""


class ZeroNormRowError(EngineError):
    """A row that must be normalizable has an L2 norm below 1e-12."""

    def __init__(self, row_index: int, context: str = ""):
        self.row_index = row_index
        msg = f"row {row_index} has (near-)zero L2 norm"
        if context:
            msg += f" in {context}"
        super().__init__(msg)


class DimensionMismatchError(EngineError):
    """Operand dimensions do not line up."""


class BadMagicError(EngineError):
    """A binary file does not start with the expected magic bytes."""


class UnsupportedVersionError(EngineError):
    """A binary file declares a format version this reader does not know."""


class TruncatedFileError(EngineError):
    """A binary file ended in the middle of a record."""


class DuplicateIdError(EngineError):
    """The same protein id appears more than once where ids must be unique."""


class ParseError(EngineError):
    """A text input (FASTA, TSV) is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingLabelError(EngineError):
    """A record id has no group label in strict mode."""


class ManifestError(EngineError):
    """A database manifest is inconsistent with the files it points to."""


class EmptySetError(EngineError):
    """An embedding set taking part in scoring has no valid rows."""


class EmptyDatabaseError(EngineError):
    """No candidates remain after excluding the query itself."""


class InsufficientPairsError(EngineError):
    """Too few training pairs for the configured batch size."""


class TooShortError(EngineError):
    """A sequence is shorter than the k-mer size."""


class SchemeMismatchError(EngineError):
    """Two MinHash signatures were built under different schemes."""


class NoRelevantError(EngineError):
    """A query has no relevant candidates (singleton group)."""


class TooFewGroupsError(EngineError):
    """Not enough distinct groups to produce a group-disjoint split."""
