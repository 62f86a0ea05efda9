#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace grg {

enum class Split { train, dev, test };

std::string to_string(Split s);
Split parse_split(const std::string& s);

// One question with its acceptable answer list.
struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> answers; // deduplicated on load, first occurrence kept
    Split split = Split::train;
};

struct DatasetStats {
    std::string name;
    std::size_t train_count = 0;
    std::size_t dev_count = 0;
    std::size_t test_count = 0;

    std::size_t total() const { return train_count + dev_count + test_count; }
};

struct Dataset {
    std::vector<QAExample> examples;
    DatasetStats stats;
};

// Loads a line-delimited dataset file:
//   {"id": str, "question": str, "answers": [str, ...], "split": "train"|"dev"|"test"}
// Rejects malformed lines (by line number), duplicate ids (by id) and empty files.
Dataset load_dataset(const std::filesystem::path& path, const std::string& name);

// Writes examples in the canonical line-delimited format. load_dataset on the
// result reproduces the list field-for-field.
void save_dataset(const std::vector<QAExample>& examples, const std::filesystem::path& path);

struct SplitViews {
    std::vector<QAExample> train;
    std::vector<QAExample> holdout;
};

// Deterministic shuffle-then-cut partition of train examples.
// |train| = floor(ratio * n), the holdout takes the remainder.
SplitViews train_holdout_split(const std::vector<QAExample>& examples, double ratio,
                               std::uint64_t seed);

// Converter for published upstream dataset formats.
enum class UpstreamStyle {
    dpr_json, // JSON array of {"question": str, "answers": [str, ...]}
    qas_tsv,  // one line per question: question<TAB>["answer", ...]
};

UpstreamStyle parse_style(const std::string& s);

// Reads an upstream file and assigns every converted example to `split`.
// Generated ids are "<prefix>-<split>-<ordinal>".
std::vector<QAExample> convert_upstream(const std::filesystem::path& in, UpstreamStyle style,
                                        Split split, const std::string& id_prefix);

} // namespace grg
