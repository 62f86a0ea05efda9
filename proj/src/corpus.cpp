#include "grg/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "grg/detail/hash.hpp"
#include "grg/detail/text.hpp"
#include "grg/error.hpp"

namespace grg {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    }
    throw Error("unknown split value");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw Error("unknown split '" + s + "' (expected train, dev or test)");
}

namespace {

std::vector<std::string> clean_answers(const std::vector<std::string>& raw,
                                       const std::string& where) {
    if (raw.empty()) throw Error(where + ": empty answer list");
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& a : raw) {
        if (detail::trim(a).empty()) throw Error(where + ": blank answer entry");
        if (seen.insert(a).second) out.push_back(a);
    }
    return out;
}

QAExample parse_record(const json& j, const std::string& where) {
    if (!j.is_object()) throw Error(where + ": record is not an object");
    for (const char* key : {"id", "question", "answers", "split"}) {
        if (!j.contains(key)) throw Error(where + ": missing field '" + std::string(key) + "'");
    }
    QAExample ex;
    if (!j["id"].is_string() || j["id"].get<std::string>().empty())
        throw Error(where + ": 'id' must be a non-empty string");
    ex.id = j["id"].get<std::string>();
    if (!j["question"].is_string() || detail::trim(j["question"].get<std::string>()).empty())
        throw Error(where + ": 'question' must be non-empty text");
    ex.question = j["question"].get<std::string>();
    if (!j["answers"].is_array()) throw Error(where + ": 'answers' must be an array");
    std::vector<std::string> raw;
    for (const auto& a : j["answers"]) {
        if (!a.is_string()) throw Error(where + ": answers must be strings");
        raw.push_back(a.get<std::string>());
    }
    ex.answers = clean_answers(raw, where);
    if (!j["split"].is_string()) throw Error(where + ": 'split' must be a string");
    ex.split = parse_split(j["split"].get<std::string>());
    return ex;
}

} // namespace

Dataset load_dataset(const std::filesystem::path& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path.string());

    Dataset ds;
    ds.stats.name = name;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("malformed record at " + where + ": " + e.what());
        }
        QAExample ex = parse_record(j, "malformed record at " + where);
        if (!ids.insert(ex.id).second) throw Error("duplicate id '" + ex.id + "' at " + where);
        switch (ex.split) {
        case Split::train: ++ds.stats.train_count; break;
        case Split::dev: ++ds.stats.dev_count; break;
        case Split::test: ++ds.stats.test_count; break;
        }
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw Error("empty dataset: " + path.string());
    return ds;
}

void save_dataset(const std::vector<QAExample>& examples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset file: " + path.string());
    for (const auto& ex : examples) {
        json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["answers"] = ex.answers;
        j["split"] = to_string(ex.split);
        out << j.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

SplitViews train_holdout_split(const std::vector<QAExample>& examples, double ratio,
                               std::uint64_t seed) {
    if (examples.empty()) throw Error("train/holdout split of an empty example list");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw Error("split ratio must be in (0, 1), got " + std::to_string(ratio));
    for (const auto& ex : examples) {
        if (ex.split != Split::train)
            throw Error("train/holdout split expects train examples only, got '" + ex.id + "'");
    }

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::Pcg rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = rng.next_below(i + 1);
        std::swap(order[i], order[j]);
    }

    const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(examples.size())));
    SplitViews views;
    views.train.reserve(cut);
    views.holdout.reserve(examples.size() - cut);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < cut ? views.train : views.holdout).push_back(examples[order[i]]);
    }
    return views;
}

UpstreamStyle parse_style(const std::string& s) {
    if (s == "dpr-json" || s == "dpr_json") return UpstreamStyle::dpr_json;
    if (s == "qas-tsv" || s == "qas_tsv") return UpstreamStyle::qas_tsv;
    throw Error("unknown upstream style '" + s + "' (expected dpr-json or qas-tsv)");
}

namespace {

std::vector<QAExample> convert_dpr_json(std::istream& in, Split split,
                                        const std::string& id_prefix) {
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed upstream JSON: ") + e.what());
    }
    if (!root.is_array()) throw Error("upstream JSON must be an array of records");
    std::vector<QAExample> out;
    std::size_t ordinal = 0;
    for (const auto& rec : root) {
        const std::string where = "record " + std::to_string(ordinal);
        if (!rec.is_object() || !rec.contains("question") || !rec.contains("answers"))
            throw Error(where + ": expected {question, answers}");
        QAExample ex;
        ex.id = id_prefix + "-" + to_string(split) + "-" + std::to_string(ordinal);
        ex.question = rec["question"].get<std::string>();
        std::vector<std::string> raw;
        for (const auto& a : rec["answers"]) raw.push_back(a.get<std::string>());
        ex.answers = clean_answers(raw, where);
        ex.split = split;
        out.push_back(std::move(ex));
        ++ordinal;
    }
    return out;
}

std::vector<QAExample> convert_qas_tsv(std::istream& in, Split split,
                                       const std::string& id_prefix) {
    std::vector<QAExample> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t ordinal = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(where + ": expected question<TAB>answers");
        QAExample ex;
        ex.id = id_prefix + "-" + to_string(split) + "-" + std::to_string(ordinal);
        ex.question = detail::trim(line.substr(0, tab));
        if (ex.question.empty()) throw Error(where + ": empty question");
        json answers;
        try {
            answers = json::parse(line.substr(tab + 1));
        } catch (const json::exception& e) {
            throw Error(where + ": malformed answer list: " + e.what());
        }
        if (!answers.is_array()) throw Error(where + ": answer list must be a JSON array");
        std::vector<std::string> raw;
        for (const auto& a : answers) raw.push_back(a.get<std::string>());
        ex.answers = clean_answers(raw, where);
        ex.split = split;
        out.push_back(std::move(ex));
        ++ordinal;
    }
    if (out.empty()) throw Error("empty upstream file");
    return out;
}

} // namespace

std::vector<QAExample> convert_upstream(const std::filesystem::path& in, UpstreamStyle style,
                                        Split split, const std::string& id_prefix) {
    std::ifstream file(in);
    if (!file) throw Error("cannot open upstream file: " + in.string());
    switch (style) {
    case UpstreamStyle::dpr_json: return convert_dpr_json(file, split, id_prefix);
    case UpstreamStyle::qas_tsv: return convert_qas_tsv(file, split, id_prefix);
    }
    throw Error("unknown upstream style");
}

} // namespace grg
