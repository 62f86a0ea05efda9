from ._grg import (
    ScoredDocument,
    VectorIndex,
    assemble_reader_prompt,
    asymptotic_class,
    build_doc_prompt,
    cosine_loss,
    cosine_similarity,
    dot_score,
    embed_text,
    exact_match,
    f1_score,
    flops_encode_corpus,
    flops_generate,
    flops_retrieve,
    normalize_answer,
    recall_at_k,
    truncate_to_tokens,
)

__version__ = "0.1.0"

__all__ = [
    "ScoredDocument",
    "VectorIndex",
    "assemble_reader_prompt",
    "asymptotic_class",
    "build_doc_prompt",
    "cosine_loss",
    "cosine_similarity",
    "dot_score",
    "embed_text",
    "exact_match",
    "f1_score",
    "flops_encode_corpus",
    "flops_generate",
    "flops_retrieve",
    "normalize_answer",
    "recall_at_k",
    "truncate_to_tokens",
]
