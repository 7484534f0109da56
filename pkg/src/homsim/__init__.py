"""Residue-level protein homolog search.

Proteins are compared as sets of unit residue vectors: the score of a query
against a candidate sums, over query residues, the best dot product against
any candidate residue. A small trained linear head maps backbone states into
the scoring space; alignment-free k-mer sketches and a pooled single-vector
cosine serve as baselines. See README.md for the CLI and file formats.
"""

from .core import (
    AMINO_ACIDS,
    EmbeddingSet,
    HiddenSet,
    ProjectionHead,
    ProteinRecord,
    l2_normalize_rows,
    normalize_hidden,
    project,
    sanitize_sequence,
    truncate_rows,
    truncate_sequence,
)
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyDatabaseError,
    EmptySetError,
    EngineError,
    InsufficientPairsError,
    ManifestError,
    MissingLabelError,
    NoRelevantError,
    NonFiniteError,
    ParseError,
    SchemeMismatchError,
    TooFewGroupsError,
    TooShortError,
    TruncatedFileError,
    UnsupportedVersionError,
    ZeroNormRowError,
)
from .evaluation import EvalReport, capped_recall_at_k, evaluate, split_by_group
from .formats import (
    DatabaseManifest,
    build_records,
    load_manifest,
    read_embedding_file,
    read_fasta,
    read_head_file,
    read_hidden_file,
    read_labels,
    read_signature_file,
    write_head_file,
    write_manifest,
    write_row_file,
    write_signature_file,
)
from .minhash import (
    MinHashScorer,
    MinHashSignature,
    exact_jaccard,
    kmer_set,
    minhash_signature,
    minhash_similarity,
)
from .scoring import (
    MaxSimScorer,
    PackedEmbeddings,
    PooledScorer,
    ScoreMatrix,
    SimilarityMap,
    maxsim,
    maxsim_asymmetry_check,
    mean_pool_cosine,
    rank_candidates,
    score_matrix,
    similarity_map,
    similarity_map_score,
    write_similarity_csv,
)
from .synthetic import flatten_groups, make_motif_groups
from .training import (
    TrainConfig,
    TrainPair,
    infonce_grad_w,
    infonce_loss,
    init_weights,
    onecycle_lr,
    sample_epoch_pairs,
    train_projection,
)

__version__ = "0.1.0"
