#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "grg/cost.hpp"
#include "grg/embedder.hpp"
#include "grg/generator.hpp"
#include "grg/metrics.hpp"
#include "grg/vindex.hpp"

namespace grg {

inline constexpr const char* kManifestSchema = "grg-manifest/1";
inline constexpr const char* kToolVersion = "grg 0.1.0";

struct PipelineConfig {
    std::filesystem::path dataset_path;
    std::filesystem::path corpus_index_path; // needed unless retrieval is disabled
    std::string split = "test";              // train / dev / test / all
    int num_generated = 10;
    int k_selected_generated = 5;
    int k_retrieved = 5;
    double similarity_threshold = 0.7;
    bool only_generated = false; // drop the corpus-retrieval stage
    bool only_retrieved = false; // drop the document-generation stage
    std::vector<int> recall_k = {1, 5};

    EmbedderConfig embedder;   // one encoder for questions and documents
    GenerationConfig generator;
    GenerationConfig reader;

    std::filesystem::path output_dir = "runs";
    int parallelism = 4;
    std::uint64_t seed = 0;

    // Parameter counts for the FLOPs estimate attached to each question.
    Flops generator_params = 175'000'000'000ull;
    Flops embedder_params = 220'000'000ull;
    Flops reader_params = 7'000'000'000ull;

    void validate() const;
};

// Flat key/value config file (one "key = value" per line, '#' comments).
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Applies one key/value pair; unknown keys are errors. Shared by the file
// loader and CLI --set overrides.
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);

struct QuestionRecord {
    std::string question_id;
    std::vector<std::string> generated_doc_ids;      // everything produced
    std::vector<ScoredDocument> selected_generated;  // survivors of vindex selection
    std::vector<ScoredDocument> retrieved;           // corpus evidence
    std::vector<std::string> truncated_doc_ids;      // texts cut at the token cap
    std::string prompt_hash;                         // fnv1a64 of the rendered prompt
    std::string prediction;
    double em = 0.0;
    double f1 = 0.0;
    std::map<int, int> recall_generated; // k -> 0/1
    std::map<int, int> recall_retrieved; // k -> 0/1
    Flops flops_estimate = 0;
    std::string error; // empty on success

    bool failed() const { return !error.empty(); }
};

struct RunAggregate {
    MetricReport metrics; // over successful records
    std::map<int, double> recall_generated;
    std::map<int, double> recall_retrieved;
    std::size_t failed = 0;
};

struct RunManifest {
    std::string schema = kManifestSchema;
    std::string version = kToolVersion;
    std::string created_at;
    std::string finished_at;
    std::string config_json; // snapshot of the effective config
    std::vector<QuestionRecord> records;
    RunAggregate aggregate;
};

// Runs generate -> select -> retrieve -> prompt -> answer -> score for every
// question in the configured split and persists the manifest atomically to
// <output_dir>/manifest.jsonl. Per-question failures are recorded and the
// run continues; more than 50% failures aborts the run.
RunManifest run_pipeline(const PipelineConfig& cfg);

struct IndexSummary {
    std::size_t count = 0;
    int dim = 0;
};

// Embeds a {"doc_id", "text"} line-delimited corpus file and persists a
// source=corpus index at out_path.
IndexSummary build_corpus_index(const std::filesystem::path& corpus_file,
                                const EmbedderConfig& embedder_cfg,
                                const std::filesystem::path& out_path);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

// Recomputes the aggregate from the stored per-question records, errors if it
// disagrees with the stored aggregate, and returns the recomputed report.
MetricReport replay(const std::filesystem::path& manifest_path);

} // namespace grg
