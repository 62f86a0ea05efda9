#include "grg/embedder.hpp"

#include <cmath>
#include <cstdlib>

#include "json.hpp"

#include "grg/detail/hash.hpp"
#include "grg/detail/text.hpp"
#include "grg/error.hpp"
#include "http_support.hpp"

namespace grg {

using nlohmann::json;

void EmbedderConfig::validate() const {
    if (dim < 1) throw Error("embedder dim must be >= 1");
    if (!allow_custom_dim && dim != 384 && dim != 768)
        throw Error("embedder dim " + std::to_string(dim) +
                    " requires the custom-dimension override (defaults are 384 and 768)");
    if (max_input_tokens < 1) throw Error("max_input_tokens must be >= 1");
    if (max_inflight < 1) throw Error("max_inflight must be >= 1");
    if (retry_base_ms < 0) throw Error("retry_base_ms must be >= 0");
    if (timeout_ms < 1) throw Error("timeout_ms must be >= 1");
}

TruncationResult truncate_to_tokens(const std::string& text, int max_tokens) {
    if (max_tokens < 1) throw Error("max_tokens must be >= 1");
    TruncationResult result;
    const std::string trimmed = detail::trim(text);

    int tokens = 0;
    bool in_token = false;
    std::size_t cut = trimmed.size();
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
        const bool space = detail::is_ascii_space(trimmed[i]);
        if (!space && !in_token) {
            ++tokens;
            if (tokens > max_tokens) {
                cut = i;
                break;
            }
        }
        in_token = !space;
    }
    result.truncated = cut < trimmed.size();
    result.text = detail::trim(trimmed.substr(0, cut));
    return result;
}

namespace {

std::string effective_endpoint(const EmbedderConfig& cfg) {
    if (const char* env = std::getenv("GRG_EMBED_ENDPOINT"); env && *env) return env;
    return cfg.endpoint;
}

// Bag of per-token pseudo-random vectors: each whitespace token seeds a
// splitmix64 stream expanded to dim signed values, the streams are summed and
// the sum is L2-normalized. Pure function of (token multiset, dim).
EmbeddingVector mock_embed(const std::vector<std::string>& tokens, int dim) {
    EmbeddingVector out;
    out.values.assign(static_cast<std::size_t>(dim), 0.0);
    for (const auto& token : tokens) {
        std::uint64_t state = detail::fnv1a64(token);
        for (auto& slot : out.values) {
            const std::uint64_t bits = detail::splitmix64(state);
            slot += 2.0 * detail::unit_double(bits) - 1.0;
        }
    }
    double norm = 0.0;
    for (double v : out.values) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error("degenerate mock embedding");
    for (double& v : out.values) v /= norm;
    return out;
}

std::vector<EmbeddingVector> remote_embed(const EmbedderConfig& cfg,
                                          const std::vector<std::string>& texts,
                                          detail::Gate& gate) {
    const std::string endpoint = effective_endpoint(cfg);
    if (endpoint.empty())
        throw Error("remote embedder needs an endpoint (config or GRG_EMBED_ENDPOINT)");

    json body;
    body["model"] = cfg.model_name;
    body["input"] = texts;

    detail::HttpRequest req;
    req.endpoint = endpoint;
    req.path = "/embed";
    req.body = body.dump();
    req.timeout_ms = cfg.timeout_ms;
    req.retry_base_ms = cfg.retry_base_ms;

    std::string response;
    {
        detail::GatePass pass(gate);
        response = detail::post_json(req);
    }

    json parsed;
    try {
        parsed = json::parse(response);
    } catch (const json::exception& e) {
        throw Error(std::string("embedding endpoint returned malformed JSON: ") + e.what());
    }
    if (!parsed.contains("vectors") || !parsed["vectors"].is_array())
        throw Error("embedding endpoint response lacks 'vectors'");
    const auto& vectors = parsed["vectors"];
    if (vectors.size() != texts.size())
        throw Error("embedding endpoint returned " + std::to_string(vectors.size()) +
                    " vectors for " + std::to_string(texts.size()) + " inputs");

    std::vector<EmbeddingVector> out;
    out.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        EmbeddingVector v;
        for (const auto& x : vectors[i]) v.values.push_back(x.get<double>());
        if (static_cast<int>(v.dim()) != cfg.dim)
            throw Error("embedding " + std::to_string(i) + " has dim " + std::to_string(v.dim()) +
                        ", expected " + std::to_string(cfg.dim));
        for (double x : v.values) {
            if (!std::isfinite(x))
                throw Error("embedding " + std::to_string(i) + " contains a non-finite value");
        }
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace

Embedder::Embedder(EmbedderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    gate_ = std::make_shared<detail::Gate>(cfg_.max_inflight);
}

EmbeddingVector Embedder::embed_text(const std::string& text) const {
    const TruncationResult capped = truncate_to_tokens(text, cfg_.max_input_tokens);
    if (capped.text.empty()) throw Error("cannot embed empty text");
    if (cfg_.provider == EmbedProvider::mock) {
        return mock_embed(detail::split_whitespace(capped.text), cfg_.dim);
    }
    return remote_embed(cfg_, {capped.text}, *gate_)[0];
}

std::vector<EmbeddingVector> Embedder::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<std::string> capped;
    capped.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const TruncationResult r = truncate_to_tokens(texts[i], cfg_.max_input_tokens);
        if (r.text.empty())
            throw Error("cannot embed empty text at batch index " + std::to_string(i));
        capped.push_back(r.text);
    }
    if (capped.empty()) return {};

    if (cfg_.provider == EmbedProvider::mock) {
        std::vector<EmbeddingVector> out;
        out.reserve(capped.size());
        for (const auto& t : capped) out.push_back(mock_embed(detail::split_whitespace(t), cfg_.dim));
        return out;
    }
    return remote_embed(cfg_, capped, *gate_);
}

} // namespace grg
