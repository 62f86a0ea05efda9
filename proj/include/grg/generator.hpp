#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grg/embedder.hpp"

namespace grg {

enum class GenProvider { mock, remote };

// The two language-model roles the pipeline talks to. They share the wire
// contract and differ only in which environment variable overrides the
// endpoint (GRG_GEN_ENDPOINT vs GRG_READER_ENDPOINT).
enum class GenRole { document_generator, reader };

struct GenerationConfig {
    GenProvider provider = GenProvider::mock;
    std::string endpoint;
    std::string model_name = "mock-lm";
    int max_new_tokens = 256;
    double temperature = 0.0; // greedy by default
    int num_documents = 10;   // capped at 50 unless override_doc_cap
    bool override_doc_cap = false;
    std::optional<std::int64_t> seed;
    int max_inflight = 4;
    int retry_base_ms = 100;
    int timeout_ms = 30000;

    void validate() const;
};

struct GeneratedDoc {
    std::string doc_id;
    std::string text;
};

struct ReaderPrompt {
    std::string rendered; // pure function of the fields below
    std::string question;
    std::vector<std::string> retrieved_docs;
    std::vector<std::string> generated_docs;
};

// "Generate a background document to answer the given question: " + question.
std::string build_doc_prompt(const std::string& question);

// Renders question + "\n"-joined retrieved docs + "\n"-joined generated docs
// + "\n</s>". Empty groups contribute nothing; zero documents total is an
// error.
ReaderPrompt assemble_reader_prompt(const std::string& question,
                                    const std::vector<std::string>& retrieved,
                                    const std::vector<std::string>& generated);

// -(1/N) sum_i log( exp(cos(h_i,t_i)/tau) / sum_j exp(cos(h_i,t_j)/tau) ).
double cosine_loss(const std::vector<EmbeddingVector>& hidden,
                   const std::vector<EmbeddingVector>& target, double tau);

class GenerationClient {
public:
    GenerationClient(GenerationConfig cfg, GenRole role);

    // Produces exactly cfg.num_documents non-empty texts with ids
    // "gen-{question_id}-{i}". The mock backend is deterministic under a
    // fixed seed.
    std::vector<GeneratedDoc> generate_documents(const std::string& question_id,
                                                 const std::string& question) const;

    // Produces a non-empty, whitespace-trimmed answer. The mock backend
    // extracts the first double-quoted span of the rendered prompt, falling
    // back to the first sentence of the first document.
    std::string generate_answer(const ReaderPrompt& prompt) const;

    const GenerationConfig& config() const { return cfg_; }
    GenRole role() const { return role_; }

private:
    std::string complete(const std::string& prompt, bool retry_empty_once,
                         std::optional<std::int64_t> seed) const;

    GenerationConfig cfg_;
    GenRole role_;
    std::shared_ptr<detail::Gate> gate_; // caps in-flight remote requests
};

} // namespace grg
