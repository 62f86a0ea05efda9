#include "grg/retriever.hpp"

#include <algorithm>

#include "grg/error.hpp"

namespace grg {

void DualEncoderConfig::validate() const {
    question_embedder.validate();
    document_embedder.validate();
    if (question_embedder.dim != document_embedder.dim)
        throw Error("question and document encoders must share one dim, got " +
                    std::to_string(question_embedder.dim) + " and " +
                    std::to_string(document_embedder.dim));
}

double dot_score(const EmbeddingVector& q, const EmbeddingVector& d) {
    if (q.dim() != d.dim())
        throw Error("dot product dimension mismatch: " + std::to_string(q.dim()) + " vs " +
                    std::to_string(d.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) sum += q.values[i] * d.values[i];
    return sum;
}

EvidenceSet rank_by_dot(const VectorIndex& corpus_index, const EmbeddingVector& q_vec, int k,
                        const std::string& question_id) {
    if (k < 1) throw Error("dense retrieval requires k >= 1");
    if (corpus_index.size() == 0) throw Error("no evidence corpus");

    struct Hit {
        std::size_t entry;
        double score;
    };
    std::vector<Hit> hits;
    hits.reserve(corpus_index.size());
    const auto& entries = corpus_index.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        hits.push_back({i, dot_score(q_vec, entries[i].vector)});
    }
    std::sort(hits.begin(), hits.end(), [&entries](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return entries[a.entry].doc_id < entries[b.entry].doc_id;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));

    EvidenceSet out;
    out.question_id = question_id;
    out.documents.reserve(hits.size());
    for (const auto& hit : hits) {
        out.documents.push_back({entries[hit.entry].doc_id, entries[hit.entry].text, hit.score});
    }
    return out;
}

EvidenceSet dense_retrieve(const VectorIndex& corpus_index, const std::string& question, int k,
                           const DualEncoderConfig& cfg, const std::string& question_id) {
    cfg.validate();
    if (k < 1) throw Error("dense retrieval requires k >= 1");
    if (corpus_index.size() == 0) throw Error("no evidence corpus");
    if (cfg.question_embedder.dim != corpus_index.dim())
        throw Error("encoder dim " + std::to_string(cfg.question_embedder.dim) +
                    " does not match corpus index dim " + std::to_string(corpus_index.dim()));

    const Embedder question_encoder(cfg.question_embedder);
    return rank_by_dot(corpus_index, question_encoder.embed_text(question), k, question_id);
}

} // namespace grg
