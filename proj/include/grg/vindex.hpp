#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "grg/embedder.hpp"

namespace grg {

enum class DocSource : std::uint8_t { generated = 0, corpus = 1 };

struct EmbeddedDocument {
    std::string doc_id;
    std::string text;
    EmbeddingVector vector;
    DocSource source = DocSource::generated;
};

struct ScoredDocument {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDocument&) const = default;
};

// q . d / (|q| |d|). Errors on dimension mismatch and zero-norm inputs.
double cosine_similarity(const EmbeddingVector& q, const EmbeddingVector& d);

// In-memory exact-scan vector store. Entries keep insertion order; vectors
// are stored at f32 precision to match the on-disk format, and document
// norms are cached at insertion time.
class VectorIndex {
public:
    explicit VectorIndex(int dim);

    // Adds documents, validating dimensions and id uniqueness up front.
    // On error nothing is inserted.
    void add(const std::vector<EmbeddedDocument>& docs);

    // Top-k by cosine similarity, scores >= threshold only, sorted by score
    // descending with ties broken by ascending doc_id. An empty index yields
    // an empty result.
    std::vector<ScoredDocument> retrieve_top_k(const EmbeddingVector& q, int k,
                                               double threshold) const;

    int dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<EmbeddedDocument>& entries() const { return entries_; }
    const EmbeddedDocument* find(const std::string& doc_id) const;
    double norm_of(std::size_t entry_index) const { return norms_[entry_index]; }

    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

private:
    int dim_;
    std::vector<EmbeddedDocument> entries_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

} // namespace grg
