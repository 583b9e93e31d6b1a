"""Diversified feature selection over embedding corpora."""

from disf._core import (
    Document,
    EmbeddingCorpus,
    SelectionConfig,
    brute_force_best_subset,
    dominance_score,
    featurize_text,
    greedy_select_batch,
    greedy_select_batch_from,
    norm_identity_residual,
    proxy_value,
    read_embeddings,
    run_cli,
    select_corpus,
    standardize_batch,
    write_embeddings,
)

__all__ = [
    "Document",
    "EmbeddingCorpus",
    "SelectionConfig",
    "brute_force_best_subset",
    "dominance_score",
    "featurize_text",
    "greedy_select_batch",
    "greedy_select_batch_from",
    "norm_identity_residual",
    "proxy_value",
    "read_embeddings",
    "run_cli",
    "select_corpus",
    "standardize_batch",
    "write_embeddings",
]
