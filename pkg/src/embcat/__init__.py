"""embcat: analyze, combine, and export pre-trained word embedding tables."""

__version__ = "0.1.0"

from .analysis import (
    CoverageReport,
    NeighborSet,
    PairReport,
    SimilarityReport,
    cosine,
    coverage,
    embedding_similarity,
    jaccard,
    knn,
    pair_report,
)
from .combine import (
    CombinePolicy,
    ModelVocab,
    PairVerdict,
    combine,
    model_vocab,
    recommend,
    transform_second,
)
from .corpus import (
    TextDataset,
    TokenDataset,
    VocabCounts,
    read_conll,
    read_labeled_text,
    top_n_types,
    vocab_counts,
)
from .embio import (
    EmbeddingTable,
    Format,
    LookupPolicy,
    RandomBackfill,
    detect_format,
    lookup,
    random_vector,
    read_embeddings,
    write_embeddings,
)
from .errors import DataError
from .tagschemes import (
    Entity,
    ScoreReport,
    bio_to_iobes,
    entity_prf,
    example_accuracy,
    extract_entities,
    iob1_to_bio,
    token_accuracy,
)

__all__ = [
    "CombinePolicy",
    "CoverageReport",
    "DataError",
    "EmbeddingTable",
    "Entity",
    "Format",
    "LookupPolicy",
    "ModelVocab",
    "NeighborSet",
    "PairReport",
    "PairVerdict",
    "RandomBackfill",
    "ScoreReport",
    "SimilarityReport",
    "TextDataset",
    "TokenDataset",
    "VocabCounts",
    "bio_to_iobes",
    "combine",
    "cosine",
    "coverage",
    "detect_format",
    "embedding_similarity",
    "entity_prf",
    "example_accuracy",
    "extract_entities",
    "iob1_to_bio",
    "jaccard",
    "knn",
    "lookup",
    "model_vocab",
    "pair_report",
    "random_vector",
    "read_conll",
    "read_embeddings",
    "read_labeled_text",
    "recommend",
    "token_accuracy",
    "top_n_types",
    "transform_second",
    "vocab_counts",
    "write_embeddings",
]
