"""crossmap: measure how well one corpus of content statements covers another.

The toolkit embeds two statement corpora (content standards and item
specifications), scores every standard/specification pair by cosine or
Pearson similarity, picks the three specifications with the highest random
forest permutation importance for each standard, fits a hierarchical
zero-intercept regression over those three, and aggregates the resulting
variance-explained weights by content domain.  A small HTTP server exposes
the results to a reviewer-facing UI.
"""

__version__ = "0.1.0"

from crossmap.corpus import Corpus, DomainScheme, Side, Statement, load_corpus
from crossmap.embeddings import (
    EmbeddingConfig,
    EmbeddingMatrix,
    fetch_embeddings,
    load_matrix,
    save_matrix,
)
from crossmap.forest import ForestConfig, ImportanceRanking, select_top_k
from crossmap.regression import StepwiseResult, hierarchical_fit, ols_no_intercept
from crossmap.report import (
    CrosswalkTable,
    DomainAggregate,
    OccurrenceCount,
    aggregate_spec_side,
    aggregate_standard_side,
    count_occurrences,
    emit_report,
)
from crossmap.similarity import (
    RegressionDataset,
    SimilarityKind,
    SimilarityMatrix,
    cosine,
    make_dataset,
    pearson,
    rank_candidates,
    similarity_matrix,
)

__all__ = [
    "Corpus",
    "CrosswalkTable",
    "DomainAggregate",
    "DomainScheme",
    "EmbeddingConfig",
    "EmbeddingMatrix",
    "ForestConfig",
    "ImportanceRanking",
    "OccurrenceCount",
    "RegressionDataset",
    "Side",
    "SimilarityKind",
    "SimilarityMatrix",
    "Statement",
    "StepwiseResult",
    "aggregate_spec_side",
    "aggregate_standard_side",
    "cosine",
    "count_occurrences",
    "emit_report",
    "fetch_embeddings",
    "hierarchical_fit",
    "load_corpus",
    "load_matrix",
    "make_dataset",
    "ols_no_intercept",
    "pearson",
    "rank_candidates",
    "save_matrix",
    "select_top_k",
    "similarity_matrix",
]
