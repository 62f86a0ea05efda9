#include "grg/pipeline.hpp"

#include <atomic>
#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "json.hpp"

#include "grg/corpus.hpp"
#include "grg/detail/hash.hpp"
#include "grg/detail/text.hpp"
#include "grg/error.hpp"
#include "grg/retriever.hpp"

namespace grg {

using nlohmann::json;

namespace {

std::string utc_now_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' expects a non-negative integer, got '" + value +
                    "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config key '" + key + "' expects a number, got '" + value + "'");
    }
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error("config key '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        const std::string t = detail::trim(item);
        if (t.empty()) continue;
        out.push_back(parse_int(key, t));
    }
    if (out.empty()) throw Error("config key '" + key + "' expects a comma-separated list");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

EmbedProvider parse_embed_provider(const std::string& value) {
    if (value == "mock") return EmbedProvider::mock;
    if (value == "remote") return EmbedProvider::remote;
    throw Error("unknown embedder provider '" + value + "' (expected mock or remote)");
}

GenProvider parse_gen_provider(const std::string& value) {
    if (value == "mock") return GenProvider::mock;
    if (value == "remote") return GenProvider::remote;
    throw Error("unknown generation provider '" + value + "' (expected mock or remote)");
}

bool apply_embedder_entry(EmbedderConfig& cfg, const std::string& field,
                          const std::string& key, const std::string& value) {
    if (field == "provider") cfg.provider = parse_embed_provider(value);
    else if (field == "dim") cfg.dim = parse_int(key, value);
    else if (field == "allow_custom_dim") cfg.allow_custom_dim = parse_flag(key, value);
    else if (field == "endpoint") cfg.endpoint = value;
    else if (field == "model_name") cfg.model_name = value;
    else if (field == "max_input_tokens") cfg.max_input_tokens = parse_int(key, value);
    else if (field == "max_inflight") cfg.max_inflight = parse_int(key, value);
    else if (field == "retry_base_ms") cfg.retry_base_ms = parse_int(key, value);
    else if (field == "timeout_ms") cfg.timeout_ms = parse_int(key, value);
    else return false;
    return true;
}

bool apply_generation_entry(GenerationConfig& cfg, const std::string& field,
                            const std::string& key, const std::string& value) {
    if (field == "provider") cfg.provider = parse_gen_provider(value);
    else if (field == "endpoint") cfg.endpoint = value;
    else if (field == "model_name") cfg.model_name = value;
    else if (field == "max_new_tokens") cfg.max_new_tokens = parse_int(key, value);
    else if (field == "temperature") cfg.temperature = parse_real(key, value);
    else if (field == "seed") cfg.seed = static_cast<std::int64_t>(parse_u64(key, value));
    else if (field == "max_inflight") cfg.max_inflight = parse_int(key, value);
    else if (field == "retry_base_ms") cfg.retry_base_ms = parse_int(key, value);
    else if (field == "timeout_ms") cfg.timeout_ms = parse_int(key, value);
    else return false;
    return true;
}

} // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset_path") { cfg.dataset_path = value; return; }
    if (key == "corpus_index_path") { cfg.corpus_index_path = value; return; }
    if (key == "split") { cfg.split = value; return; }
    if (key == "num_generated") { cfg.num_generated = parse_int(key, value); return; }
    if (key == "k_selected_generated") { cfg.k_selected_generated = parse_int(key, value); return; }
    if (key == "k_retrieved") { cfg.k_retrieved = parse_int(key, value); return; }
    if (key == "similarity_threshold") { cfg.similarity_threshold = parse_real(key, value); return; }
    if (key == "only_generated") { cfg.only_generated = parse_flag(key, value); return; }
    if (key == "only_retrieved") { cfg.only_retrieved = parse_flag(key, value); return; }
    if (key == "recall_k") { cfg.recall_k = parse_int_list(key, value); return; }
    if (key == "output_dir") { cfg.output_dir = value; return; }
    if (key == "parallelism") { cfg.parallelism = parse_int(key, value); return; }
    if (key == "seed") { cfg.seed = parse_u64(key, value); return; }
    if (key == "generator_params") { cfg.generator_params = parse_u64(key, value); return; }
    if (key == "embedder_params") { cfg.embedder_params = parse_u64(key, value); return; }
    if (key == "reader_params") { cfg.reader_params = parse_u64(key, value); return; }

    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        const std::string group = key.substr(0, dot);
        const std::string field = key.substr(dot + 1);
        if (group == "embedder" && apply_embedder_entry(cfg.embedder, field, key, value)) return;
        if (group == "generator" && apply_generation_entry(cfg.generator, field, key, value))
            return;
        if (group == "reader" && apply_generation_entry(cfg.reader, field, key, value)) return;
    }
    throw Error("unknown config key '" + key + "'");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path.string());
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(line_no) + " is not 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw Error("config line " + std::to_string(line_no) + " has an empty key");
        try {
            apply_config_entry(cfg, key, value);
        } catch (const Error& e) {
            throw Error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

void PipelineConfig::validate() const {
    if (dataset_path.empty()) throw Error("pipeline config needs a dataset_path");
    if (split != "all") parse_split(split);
    if (only_generated && only_retrieved)
        throw Error("only_generated and only_retrieved exclude each other");
    if (!(similarity_threshold >= -1.0 && similarity_threshold <= 1.0))
        throw Error("similarity_threshold must be within [-1, 1]");
    if (!only_retrieved) {
        if (num_generated < 1) throw Error("num_generated must be >= 1 when generation is on");
        if (k_selected_generated < 0 || k_selected_generated > num_generated)
            throw Error("k_selected_generated must be within [0, num_generated]");
    }
    if (!only_generated) {
        if (corpus_index_path.empty())
            throw Error("pipeline config needs a corpus_index_path when retrieval is on");
        if (k_retrieved < 1) throw Error("k_retrieved must be >= 1 when retrieval is on");
    }
    if (recall_k.empty()) throw Error("recall_k must list at least one cutoff");
    for (int k : recall_k) {
        if (k < 1) throw Error("recall_k entries must be >= 1");
    }
    if (parallelism < 1) throw Error("parallelism must be >= 1");
    if (generator_params < 1 || embedder_params < 1 || reader_params < 1)
        throw Error("model parameter counts must be >= 1");
    embedder.validate();
    if (!only_retrieved) {
        GenerationConfig g = generator;
        g.num_documents = num_generated;
        g.validate();
    }
    reader.validate();
}

namespace {

json config_to_json(const PipelineConfig& cfg) {
    json e;
    e["provider"] = cfg.embedder.provider == EmbedProvider::mock ? "mock" : "remote";
    e["dim"] = cfg.embedder.dim;
    e["allow_custom_dim"] = cfg.embedder.allow_custom_dim;
    e["endpoint"] = cfg.embedder.endpoint;
    e["model_name"] = cfg.embedder.model_name;
    e["max_input_tokens"] = cfg.embedder.max_input_tokens;
    e["max_inflight"] = cfg.embedder.max_inflight;
    e["retry_base_ms"] = cfg.embedder.retry_base_ms;
    e["timeout_ms"] = cfg.embedder.timeout_ms;

    auto gen_json = [](const GenerationConfig& g) {
        json j;
        j["provider"] = g.provider == GenProvider::mock ? "mock" : "remote";
        j["endpoint"] = g.endpoint;
        j["model_name"] = g.model_name;
        j["max_new_tokens"] = g.max_new_tokens;
        j["temperature"] = g.temperature;
        if (g.seed) j["seed"] = *g.seed;
        j["max_inflight"] = g.max_inflight;
        j["retry_base_ms"] = g.retry_base_ms;
        j["timeout_ms"] = g.timeout_ms;
        return j;
    };

    json c;
    c["dataset_path"] = cfg.dataset_path.string();
    c["corpus_index_path"] = cfg.corpus_index_path.string();
    c["split"] = cfg.split;
    c["num_generated"] = cfg.num_generated;
    c["k_selected_generated"] = cfg.k_selected_generated;
    c["k_retrieved"] = cfg.k_retrieved;
    c["similarity_threshold"] = cfg.similarity_threshold;
    c["only_generated"] = cfg.only_generated;
    c["only_retrieved"] = cfg.only_retrieved;
    c["recall_k"] = cfg.recall_k;
    c["embedder"] = e;
    c["generator"] = gen_json(cfg.generator);
    c["reader"] = gen_json(cfg.reader);
    c["output_dir"] = cfg.output_dir.string();
    c["parallelism"] = cfg.parallelism;
    c["seed"] = cfg.seed;
    c["generator_params"] = cfg.generator_params;
    c["embedder_params"] = cfg.embedder_params;
    c["reader_params"] = cfg.reader_params;
    return c;
}

json scored_to_json(const std::vector<ScoredDocument>& docs) {
    json arr = json::array();
    for (const auto& d : docs) {
        json j;
        j["doc_id"] = d.doc_id;
        j["score"] = d.score;
        arr.push_back(j);
    }
    return arr;
}

std::vector<ScoredDocument> scored_from_json(const json& arr) {
    std::vector<ScoredDocument> out;
    for (const auto& j : arr) out.push_back({j.at("doc_id").get<std::string>(),
                                             j.at("score").get<double>()});
    return out;
}

json recall_map_to_json(const std::map<int, int>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
}

std::map<int, int> recall_map_from_json(const json& j) {
    std::map<int, int> m;
    for (auto it = j.begin(); it != j.end(); ++it) m[std::stoi(it.key())] = it.value().get<int>();
    return m;
}

json recall_means_to_json(const std::map<int, double>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
}

std::map<int, double> recall_means_from_json(const json& j) {
    std::map<int, double> m;
    for (auto it = j.begin(); it != j.end(); ++it)
        m[std::stoi(it.key())] = it.value().get<double>();
    return m;
}

json record_to_json(const QuestionRecord& rec) {
    json j;
    j["type"] = "question";
    j["question_id"] = rec.question_id;
    j["generated_doc_ids"] = rec.generated_doc_ids;
    j["selected_generated"] = scored_to_json(rec.selected_generated);
    j["retrieved"] = scored_to_json(rec.retrieved);
    j["truncated_doc_ids"] = rec.truncated_doc_ids;
    j["prompt_hash"] = rec.prompt_hash;
    j["prediction"] = rec.prediction;
    j["em"] = rec.em;
    j["f1"] = rec.f1;
    j["recall_generated"] = recall_map_to_json(rec.recall_generated);
    j["recall_retrieved"] = recall_map_to_json(rec.recall_retrieved);
    j["flops_estimate"] = rec.flops_estimate;
    j["error"] = rec.error;
    return j;
}

QuestionRecord record_from_json(const json& j) {
    QuestionRecord rec;
    rec.question_id = j.at("question_id").get<std::string>();
    rec.generated_doc_ids = j.at("generated_doc_ids").get<std::vector<std::string>>();
    rec.selected_generated = scored_from_json(j.at("selected_generated"));
    rec.retrieved = scored_from_json(j.at("retrieved"));
    rec.truncated_doc_ids = j.at("truncated_doc_ids").get<std::vector<std::string>>();
    rec.prompt_hash = j.at("prompt_hash").get<std::string>();
    rec.prediction = j.at("prediction").get<std::string>();
    rec.em = j.at("em").get<double>();
    rec.f1 = j.at("f1").get<double>();
    rec.recall_generated = recall_map_from_json(j.at("recall_generated"));
    rec.recall_retrieved = recall_map_from_json(j.at("recall_retrieved"));
    rec.flops_estimate = j.at("flops_estimate").get<Flops>();
    rec.error = j.at("error").get<std::string>();
    return rec;
}

json aggregate_to_json(const RunAggregate& agg, const std::string& finished_at) {
    json j;
    j["type"] = "aggregate";
    j["em"] = agg.metrics.em;
    j["f1"] = agg.metrics.f1;
    j["n"] = agg.metrics.n;
    j["recall_generated"] = recall_means_to_json(agg.recall_generated);
    j["recall_retrieved"] = recall_means_to_json(agg.recall_retrieved);
    j["failed"] = agg.failed;
    j["finished_at"] = finished_at;
    return j;
}

RunAggregate aggregate_from_json(const json& j) {
    RunAggregate agg;
    agg.metrics.em = j.at("em").get<double>();
    agg.metrics.f1 = j.at("f1").get<double>();
    agg.metrics.n = j.at("n").get<std::size_t>();
    agg.recall_generated = recall_means_from_json(j.at("recall_generated"));
    agg.recall_retrieved = recall_means_from_json(j.at("recall_retrieved"));
    agg.failed = j.at("failed").get<std::size_t>();
    return agg;
}

RunAggregate compute_aggregate(const std::vector<QuestionRecord>& records) {
    RunAggregate agg;
    std::vector<QuestionScore> scores;
    std::map<int, std::vector<int>> gen_hits;
    std::map<int, std::vector<int>> ret_hits;
    for (const auto& rec : records) {
        if (rec.failed()) {
            ++agg.failed;
            continue;
        }
        scores.push_back({rec.em, rec.f1});
        for (const auto& [k, hit] : rec.recall_generated) gen_hits[k].push_back(hit);
        for (const auto& [k, hit] : rec.recall_retrieved) ret_hits[k].push_back(hit);
    }
    if (!scores.empty()) agg.metrics = aggregate_metrics(scores);
    for (const auto& [k, hits] : gen_hits) agg.recall_generated[k] = aggregate_recall(k, hits).recall;
    for (const auto& [k, hits] : ret_hits) agg.recall_retrieved[k] = aggregate_recall(k, hits).recall;
    return agg;
}

bool recall_means_equal(const std::map<int, double>& a, const std::map<int, double>& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second != ib->second) return false;
    }
    return true;
}

Flops token_count(const std::string& text) {
    return static_cast<Flops>(detail::split_whitespace(text).size());
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

struct StagePlan {
    bool generation = true;
    bool retrieval = true;
};

QuestionRecord process_question(const QAExample& q, const PipelineConfig& cfg,
                                const StagePlan& plan, const Embedder& embedder,
                                const GenerationClient& doc_client,
                                const GenerationClient& reader_client,
                                const VectorIndex* corpus_index) {
    QuestionRecord rec;
    rec.question_id = q.id;
    try {
        std::vector<std::string> selected_texts;
        Flops flops = 0;

        if (plan.generation) {
            const auto docs = doc_client.generate_documents(q.id, q.question);
            std::vector<std::string> texts;
            texts.reserve(docs.size());
            Flops generated_tokens = 0;
            for (const auto& d : docs) {
                rec.generated_doc_ids.push_back(d.doc_id);
                texts.push_back(d.text);
                generated_tokens += token_count(d.text);
                if (truncate_to_tokens(d.text, cfg.embedder.max_input_tokens).truncated)
                    rec.truncated_doc_ids.push_back(d.doc_id);
            }
            flops += flops_generate(cfg.generator_params, 1, generated_tokens);

            if (cfg.k_selected_generated > 0) {
                const auto vectors = embedder.embed_batch(texts);
                std::vector<EmbeddedDocument> embedded;
                embedded.reserve(docs.size());
                Flops embedded_tokens = 0;
                for (std::size_t i = 0; i < docs.size(); ++i) {
                    embedded.push_back({docs[i].doc_id, docs[i].text, vectors[i],
                                        DocSource::generated});
                    embedded_tokens += token_count(
                        truncate_to_tokens(docs[i].text, cfg.embedder.max_input_tokens).text);
                }
                VectorIndex scratch(cfg.embedder.dim);
                scratch.add(embedded);
                const EmbeddingVector q_vec = embedder.embed_text(q.question);
                embedded_tokens += token_count(
                    truncate_to_tokens(q.question, cfg.embedder.max_input_tokens).text);
                flops += flops_encode_corpus(cfg.embedder_params, 1, embedded_tokens);

                rec.selected_generated = scratch.retrieve_top_k(q_vec, cfg.k_selected_generated,
                                                                cfg.similarity_threshold);
                for (const auto& sd : rec.selected_generated) {
                    selected_texts.push_back(scratch.find(sd.doc_id)->text);
                }
            }
        }

        std::vector<std::string> retrieved_texts;
        if (plan.retrieval) {
            DualEncoderConfig dual;
            dual.question_embedder = cfg.embedder;
            dual.document_embedder = cfg.embedder;
            const EvidenceSet evidence =
                dense_retrieve(*corpus_index, q.question, cfg.k_retrieved, dual, q.id);
            for (const auto& d : evidence.documents) {
                rec.retrieved.push_back({d.doc_id, d.score});
                retrieved_texts.push_back(d.text);
            }
            const Flops query_tokens =
                token_count(truncate_to_tokens(q.question, cfg.embedder.max_input_tokens).text);
            flops += flops_retrieve(cfg.embedder_params, query_tokens,
                                    static_cast<Flops>(corpus_index->size()),
                                    static_cast<Flops>(corpus_index->dim()));
        }

        if (truncate_to_tokens(q.question, cfg.embedder.max_input_tokens).truncated)
            rec.truncated_doc_ids.push_back(q.id);

        const ReaderPrompt prompt =
            assemble_reader_prompt(q.question, retrieved_texts, selected_texts);
        rec.prompt_hash = hash_hex(detail::fnv1a64(prompt.rendered));
        flops += flops_generate(cfg.reader_params, 1, token_count(prompt.rendered));

        rec.prediction = reader_client.generate_answer(prompt);
        rec.em = exact_match(rec.prediction, q.answers);
        rec.f1 = f1_score(rec.prediction, q.answers);
        for (int k : cfg.recall_k) {
            if (plan.generation) rec.recall_generated[k] = recall_at_k(selected_texts, q.answers, k);
            if (plan.retrieval) rec.recall_retrieved[k] = recall_at_k(retrieved_texts, q.answers, k);
        }
        rec.flops_estimate = flops;
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

} // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();

    RunManifest manifest;
    manifest.created_at = utc_now_iso8601();
    manifest.config_json = config_to_json(cfg).dump();

    Dataset dataset = load_dataset(cfg.dataset_path, cfg.dataset_path.stem().string());
    std::vector<QAExample> questions;
    if (cfg.split == "all") {
        questions = std::move(dataset.examples);
    } else {
        const Split wanted = parse_split(cfg.split);
        for (auto& ex : dataset.examples) {
            if (ex.split == wanted) questions.push_back(std::move(ex));
        }
    }
    if (questions.empty()) throw Error("no questions in split '" + cfg.split + "'");

    StagePlan plan;
    plan.generation = !cfg.only_retrieved;
    plan.retrieval = !cfg.only_generated;

    std::optional<VectorIndex> corpus_index;
    if (plan.retrieval) {
        corpus_index = VectorIndex::load(cfg.corpus_index_path);
        if (corpus_index->size() == 0) throw Error("no evidence corpus");
        if (corpus_index->dim() != cfg.embedder.dim)
            throw Error("corpus index dim " + std::to_string(corpus_index->dim()) +
                        " does not match embedder dim " + std::to_string(cfg.embedder.dim));
        for (const auto& e : corpus_index->entries()) {
            if (e.source != DocSource::corpus)
                throw Error("corpus index contains generated-source entry '" + e.doc_id + "'");
        }
    }

    const Embedder embedder(cfg.embedder);
    GenerationConfig doc_cfg = cfg.generator;
    doc_cfg.num_documents = plan.generation ? cfg.num_generated : 1;
    if (!doc_cfg.seed) doc_cfg.seed = static_cast<std::int64_t>(cfg.seed);
    const GenerationClient doc_client(doc_cfg, GenRole::document_generator);
    GenerationConfig reader_cfg = cfg.reader;
    if (!reader_cfg.seed) reader_cfg.seed = static_cast<std::int64_t>(cfg.seed);
    const GenerationClient reader_client(reader_cfg, GenRole::reader);

    manifest.records.resize(questions.size());
    std::atomic<std::size_t> cursor{0};
    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), questions.size()));
    auto drain = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= questions.size()) return;
            manifest.records[i] =
                process_question(questions[i], cfg, plan, embedder, doc_client, reader_client,
                                 plan.retrieval ? &*corpus_index : nullptr);
        }
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }

    manifest.aggregate = compute_aggregate(manifest.records);
    if (manifest.aggregate.failed * 2 > manifest.records.size()) {
        std::string first_error;
        for (const auto& rec : manifest.records) {
            if (rec.failed()) { first_error = rec.error; break; }
        }
        throw Error("run failed: " + std::to_string(manifest.aggregate.failed) + " of " +
                    std::to_string(manifest.records.size()) + " questions failed (first: " +
                    first_error + ")");
    }
    manifest.finished_at = utc_now_iso8601();

    write_manifest(manifest, cfg.output_dir / "manifest.jsonl");
    return manifest;
}

IndexSummary build_corpus_index(const std::filesystem::path& corpus_file,
                                const EmbedderConfig& embedder_cfg,
                                const std::filesystem::path& out_path) {
    std::ifstream in(corpus_file);
    if (!in) throw Error("cannot open corpus file: " + corpus_file.string());

    std::vector<std::pair<std::string, std::string>> docs;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("malformed corpus record at line " + std::to_string(line_no) + ": " +
                        e.what());
        }
        if (!j.contains("doc_id") || !j.contains("text"))
            throw Error("corpus record at line " + std::to_string(line_no) +
                        " needs doc_id and text");
        std::string doc_id = j["doc_id"].get<std::string>();
        std::string text = j["text"].get<std::string>();
        if (doc_id.empty())
            throw Error("corpus record at line " + std::to_string(line_no) + " has an empty doc_id");
        if (detail::trim(text).empty()) throw Error("corpus document '" + doc_id + "' has no text");
        if (!ids.insert(doc_id).second) throw Error("duplicate corpus doc_id '" + doc_id + "'");
        docs.emplace_back(std::move(doc_id), std::move(text));
    }
    if (docs.empty()) throw Error("empty corpus file: " + corpus_file.string());

    const Embedder embedder(embedder_cfg);
    VectorIndex index(embedder_cfg.dim);
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < docs.size(); start += kChunk) {
        const std::size_t end = std::min(docs.size(), start + kChunk);
        std::vector<std::string> texts;
        texts.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) texts.push_back(docs[i].second);
        std::vector<EmbeddingVector> vectors;
        try {
            vectors = embedder.embed_batch(texts);
        } catch (const Error&) {
            // Re-run one-by-one so the error names the offending document.
            for (std::size_t i = start; i < end; ++i) {
                try {
                    embedder.embed_text(docs[i].second);
                } catch (const Error& single) {
                    throw Error("failed to embed corpus document '" + docs[i].first +
                                "': " + single.what());
                }
            }
            throw;
        }
        std::vector<EmbeddedDocument> embedded;
        embedded.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            embedded.push_back({docs[i].first, docs[i].second, vectors[i - start],
                                DocSource::corpus});
        }
        index.add(embedded);
    }

    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    index.save(out_path);
    return {index.size(), embedder_cfg.dim};
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write manifest: " + tmp.string());
        json header;
        header["type"] = "header";
        header["schema"] = manifest.schema;
        header["version"] = manifest.version;
        header["created_at"] = manifest.created_at;
        header["config"] = json::parse(manifest.config_json);
        out << header.dump() << '\n';
        for (const auto& rec : manifest.records) out << record_to_json(rec).dump() << '\n';
        out << aggregate_to_json(manifest.aggregate, manifest.finished_at).dump() << '\n';
        if (!out) throw Error("manifest write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path.string());

    RunManifest manifest;
    bool saw_header = false;
    bool saw_aggregate = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("malformed manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (!saw_header) {
            if (type != "header") throw Error("manifest must start with a header record");
            const std::string schema = j.at("schema").get<std::string>();
            if (schema != kManifestSchema)
                throw Error("manifest schema '" + schema + "' unsupported (this build reads '" +
                            kManifestSchema + "')");
            manifest.schema = schema;
            manifest.version = j.value("version", "");
            manifest.created_at = j.value("created_at", "");
            manifest.config_json = j.at("config").dump();
            saw_header = true;
            continue;
        }
        if (type == "question") {
            if (saw_aggregate) throw Error("manifest has question records after the aggregate");
            manifest.records.push_back(record_from_json(j));
        } else if (type == "aggregate") {
            if (saw_aggregate) throw Error("manifest has more than one aggregate record");
            manifest.aggregate = aggregate_from_json(j);
            manifest.finished_at = j.value("finished_at", "");
            saw_aggregate = true;
        } else {
            throw Error("manifest line " + std::to_string(line_no) + " has unknown type '" +
                        type + "'");
        }
    }
    if (!saw_header) throw Error("manifest is empty: " + path.string());
    if (!saw_aggregate) throw Error("manifest has no aggregate record (interrupted run?)");
    return manifest;
}

MetricReport replay(const std::filesystem::path& manifest_path) {
    const RunManifest manifest = read_manifest(manifest_path);
    if (manifest.records.empty()) throw Error("manifest has no question records");

    const RunAggregate recomputed = compute_aggregate(manifest.records);
    const RunAggregate& stored = manifest.aggregate;
    if (recomputed.metrics.em != stored.metrics.em || recomputed.metrics.f1 != stored.metrics.f1 ||
        recomputed.metrics.n != stored.metrics.n || recomputed.failed != stored.failed ||
        !recall_means_equal(recomputed.recall_generated, stored.recall_generated) ||
        !recall_means_equal(recomputed.recall_retrieved, stored.recall_retrieved)) {
        throw Error("replay mismatch: stored aggregate does not match the per-question records");
    }
    return recomputed.metrics;
}

} // namespace grg
