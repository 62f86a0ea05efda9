#include "grg/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "json.hpp"

#include "grg/detail/hash.hpp"
#include "grg/detail/text.hpp"
#include "grg/error.hpp"
#include "grg/vindex.hpp"
#include "http_support.hpp"

namespace grg {

using nlohmann::json;

void GenerationConfig::validate() const {
    if (num_documents < 1) throw Error("num_documents must be >= 1");
    if (num_documents > 50 && !override_doc_cap)
        throw Error("num_documents " + std::to_string(num_documents) +
                    " exceeds the cap of 50 (set the override to exceed it)");
    if (max_new_tokens < 1) throw Error("max_new_tokens must be >= 1");
    if (temperature < 0.0) throw Error("temperature must be >= 0");
    if (max_inflight < 1) throw Error("max_inflight must be >= 1");
    if (retry_base_ms < 0) throw Error("retry_base_ms must be >= 0");
    if (timeout_ms < 1) throw Error("timeout_ms must be >= 1");
}

std::string build_doc_prompt(const std::string& question) {
    if (detail::trim(question).empty()) throw Error("cannot build a prompt for an empty question");
    return "Generate a background document to answer the given question: " + question;
}

ReaderPrompt assemble_reader_prompt(const std::string& question,
                                    const std::vector<std::string>& retrieved,
                                    const std::vector<std::string>& generated) {
    if (detail::trim(question).empty()) throw Error("cannot assemble a prompt for an empty question");
    if (retrieved.empty() && generated.empty()) throw Error("no evidence");

    std::vector<std::string> parts;
    parts.reserve(1 + retrieved.size() + generated.size());
    parts.push_back(question);
    parts.insert(parts.end(), retrieved.begin(), retrieved.end());
    parts.insert(parts.end(), generated.begin(), generated.end());

    ReaderPrompt prompt;
    prompt.rendered = detail::join(parts, "\n") + "\n</s>";
    prompt.question = question;
    prompt.retrieved_docs = retrieved;
    prompt.generated_docs = generated;
    return prompt;
}

double cosine_loss(const std::vector<EmbeddingVector>& hidden,
                   const std::vector<EmbeddingVector>& target, double tau) {
    if (hidden.empty()) throw Error("cosine loss requires at least one pair");
    if (hidden.size() != target.size())
        throw Error("cosine loss length mismatch: " + std::to_string(hidden.size()) + " vs " +
                    std::to_string(target.size()));
    if (!(tau > 0.0)) throw Error("cosine loss temperature must be > 0");

    const std::size_t n = hidden.size();
    double total = 0.0;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = cosine_similarity(hidden[i], target[j]) / tau;
        }
        const double m = *std::max_element(row.begin(), row.end());
        double sum_exp = 0.0;
        for (double v : row) sum_exp += std::exp(v - m);
        const double log_softmax_ii = (row[i] - m) - std::log(sum_exp);
        total -= log_softmax_ii;
    }
    return total / static_cast<double>(n);
}

namespace {

const char* kFillerWords[16] = {
    "history", "record",  "analysis", "account", "survey",  "context", "review",  "notes",
    "profile", "summary", "overview", "detail",  "archive", "report",  "chronicle", "digest",
};

std::string mock_document(const std::string& question, std::uint64_t seed, int index) {
    std::uint64_t state = detail::fnv1a64(question) ^ (seed * 0x9E3779B97F4A7C15ull) ^
                          (static_cast<std::uint64_t>(index) + 1);
    std::string text = "Background document " + std::to_string(index) + " for: " + question;
    text += " It covers";
    for (int w = 0; w < 6; ++w) {
        const std::uint64_t bits = detail::splitmix64(state);
        text += ' ';
        text += kFillerWords[bits & 0xF];
    }
    text += '.';
    return text;
}

std::string first_quoted_span(const std::string& s) {
    const auto open = s.find('"');
    if (open == std::string::npos) return {};
    const auto close = s.find('"', open + 1);
    if (close == std::string::npos) return {};
    return detail::trim(s.substr(open + 1, close - open - 1));
}

std::string first_sentence(const std::string& s) {
    const auto stop = s.find_first_of(".!?");
    return detail::trim(stop == std::string::npos ? s : s.substr(0, stop));
}

std::string endpoint_env_var(GenRole role) {
    return role == GenRole::reader ? "GRG_READER_ENDPOINT" : "GRG_GEN_ENDPOINT";
}

std::string effective_endpoint(const GenerationConfig& cfg, GenRole role) {
    if (const char* env = std::getenv(endpoint_env_var(role).c_str()); env && *env) return env;
    return cfg.endpoint;
}

} // namespace

GenerationClient::GenerationClient(GenerationConfig cfg, GenRole role)
    : cfg_(std::move(cfg)), role_(role) {
    cfg_.validate();
    gate_ = std::make_shared<detail::Gate>(cfg_.max_inflight);
}

std::string GenerationClient::complete(const std::string& prompt, bool retry_empty_once,
                                       std::optional<std::int64_t> seed) const {
    const std::string endpoint = effective_endpoint(cfg_, role_);
    if (endpoint.empty())
        throw Error("remote generator needs an endpoint (config or " + endpoint_env_var(role_) +
                    ")");

    json body;
    body["model"] = cfg_.model_name;
    body["prompt"] = prompt;
    body["max_new_tokens"] = cfg_.max_new_tokens;
    body["temperature"] = cfg_.temperature;
    if (seed) body["seed"] = *seed;

    detail::HttpRequest req;
    req.endpoint = endpoint;
    req.path = "/generate";
    req.body = body.dump();
    req.timeout_ms = cfg_.timeout_ms;
    req.retry_base_ms = cfg_.retry_base_ms;

    for (int round = 0;; ++round) {
        std::string response;
        {
            detail::GatePass pass(*gate_);
            response = detail::post_json(req);
        }
        json parsed;
        try {
            parsed = json::parse(response);
        } catch (const json::exception& e) {
            throw Error(std::string("generation endpoint returned malformed JSON: ") + e.what());
        }
        if (!parsed.contains("text") || !parsed["text"].is_string())
            throw Error("generation endpoint response lacks 'text'");
        const std::string text = detail::trim(parsed["text"].get<std::string>());
        if (!text.empty()) return text;
        if (!retry_empty_once || round >= 1) throw Error("generation endpoint returned an empty completion");
    }
}

std::vector<GeneratedDoc> GenerationClient::generate_documents(const std::string& question_id,
                                                               const std::string& question) const {
    const std::string prompt = build_doc_prompt(question);
    std::vector<GeneratedDoc> docs;
    docs.reserve(static_cast<std::size_t>(cfg_.num_documents));
    for (int i = 0; i < cfg_.num_documents; ++i) {
        GeneratedDoc doc;
        doc.doc_id = "gen-" + question_id + "-" + std::to_string(i);
        if (cfg_.provider == GenProvider::mock) {
            doc.text = mock_document(question, cfg_.seed.value_or(0), i);
        } else {
            // Distinct completions for one prompt come from varying the seed
            // per document when one is pinned.
            std::optional<std::int64_t> seed = cfg_.seed;
            if (seed) *seed += i;
            doc.text = complete(prompt, true, seed);
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::string GenerationClient::generate_answer(const ReaderPrompt& prompt) const {
    if (prompt.rendered.empty()) throw Error("cannot answer an empty prompt");
    if (cfg_.provider == GenProvider::remote) {
        return complete(prompt.rendered, false, cfg_.seed);
    }

    const std::string quoted = first_quoted_span(prompt.rendered);
    if (!quoted.empty()) return quoted;
    if (!prompt.generated_docs.empty()) {
        const std::string s = first_sentence(prompt.generated_docs.front());
        if (!s.empty()) return s;
    }
    if (!prompt.retrieved_docs.empty()) {
        const std::string s = first_sentence(prompt.retrieved_docs.front());
        if (!s.empty()) return s;
    }
    throw Error("mock reader produced an empty completion");
}

} // namespace grg
