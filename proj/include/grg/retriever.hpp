#pragma once

#include <string>
#include <vector>

#include "grg/embedder.hpp"
#include "grg/vindex.hpp"

namespace grg {

// Separate question/document encoder endpoints sharing one dimension.
struct DualEncoderConfig {
    EmbedderConfig question_embedder;
    EmbedderConfig document_embedder;

    void validate() const;
};

struct EvidenceDoc {
    std::string doc_id;
    std::string text;
    double score = 0.0;
};

struct EvidenceSet {
    std::string question_id;
    std::vector<EvidenceDoc> documents; // scores non-increasing, ids unique
};

// Plain dot product. Errors on dimension mismatch.
double dot_score(const EmbeddingVector& q, const EmbeddingVector& d);

// Ranks every corpus entry by dot_score against q_vec, descending, ties by
// ascending doc_id, and returns min(k, N) documents.
EvidenceSet rank_by_dot(const VectorIndex& corpus_index, const EmbeddingVector& q_vec, int k,
                        const std::string& question_id = "");

// Embeds the question with the question encoder and ranks the corpus by dot
// product. The corpus vectors are the precomputed ones stored in the index.
EvidenceSet dense_retrieve(const VectorIndex& corpus_index, const std::string& question, int k,
                           const DualEncoderConfig& cfg, const std::string& question_id = "");

} // namespace grg
