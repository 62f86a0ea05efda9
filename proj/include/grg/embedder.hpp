#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace grg {

namespace detail {
class Gate;
}

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

enum class EmbedProvider { mock, remote };

struct EmbedderConfig {
    EmbedProvider provider = EmbedProvider::mock;
    int dim = 384;                 // 384 and 768 are the supported defaults
    bool allow_custom_dim = false; // explicit opt-in for other dimensions
    std::string endpoint;          // remote only; GRG_EMBED_ENDPOINT wins when set
    std::string model_name = "mock-embedder";
    int max_input_tokens = 512;    // whitespace tokens kept before embedding
    int max_inflight = 4;          // concurrent remote requests
    int retry_base_ms = 100;       // exponential backoff base
    int timeout_ms = 30000;

    void validate() const;
};

struct TruncationResult {
    std::string text; // trimmed, truncated at a whitespace token boundary
    bool truncated = false;
};

// Applies the trim + token-cap rule texts go through before embedding.
TruncationResult truncate_to_tokens(const std::string& text, int max_tokens);

class Embedder {
public:
    explicit Embedder(EmbedderConfig cfg);

    // Embeds one non-empty text. The mock provider is a pure function of
    // (token multiset, dim); the remote provider POSTs to {endpoint}/embed.
    EmbeddingVector embed_text(const std::string& text) const;

    // Order-preserving batch embedding. Any failing element fails the whole
    // batch with an error naming its index.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;

    const EmbedderConfig& config() const { return cfg_; }

private:
    EmbedderConfig cfg_;
    std::shared_ptr<detail::Gate> gate_; // caps in-flight remote requests
};

} // namespace grg
