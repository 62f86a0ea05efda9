#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grg/corpus.hpp"
#include "grg/cost.hpp"
#include "grg/embedder.hpp"
#include "grg/error.hpp"
#include "grg/generator.hpp"
#include "grg/metrics.hpp"
#include "grg/pipeline.hpp"
#include "grg/retriever.hpp"
#include "grg/vindex.hpp"

namespace {

using nlohmann::json;

constexpr const char* kAdapterGuide = R"(Fronting an OpenAI-style server with the grg wire contract
===========================================================

grg talks to two tiny JSON-over-HTTP endpoints:

  POST {endpoint}/embed
    request:  {"model": str, "input": [str, ...]}
    response: {"vectors": [[f64, ...], ...]}   one vector per input, fixed dim

  POST {endpoint}/generate
    request:  {"model": str, "prompt": str, "max_new_tokens": int,
               "temperature": f64, "seed": int (optional)}
    response: {"text": str}

Point GRG_EMBED_ENDPOINT, GRG_GEN_ENDPOINT and GRG_READER_ENDPOINT (or the
embedder.endpoint / generator.endpoint / reader.endpoint config keys) at any
server speaking this contract. Non-200 statuses are errors; 408/429/5xx are
retried up to 5 attempts with exponential backoff.

To front an OpenAI-style server, run a ~30-line proxy that translates:

  /embed    -> POST {upstream}/v1/embeddings
               body: {"model": model, "input": input}
               map response.data[i].embedding -> vectors[i]

  /generate -> POST {upstream}/v1/chat/completions
               body: {"model": model,
                      "messages": [{"role": "user", "content": prompt}],
                      "max_tokens": max_new_tokens,
                      "temperature": temperature, "seed": seed}
               map response.choices[0].message.content -> text

Python sketch (flask):

    from flask import Flask, request, jsonify
    import requests

    UPSTREAM = "http://localhost:11434"
    app = Flask(__name__)

    @app.post("/embed")
    def embed():
        r = requests.post(f"{UPSTREAM}/v1/embeddings", json=request.json).json()
        return jsonify(vectors=[d["embedding"] for d in r["data"]])

    @app.post("/generate")
    def generate():
        q = request.json
        body = {"model": q["model"],
                "messages": [{"role": "user", "content": q["prompt"]}],
                "max_tokens": q["max_new_tokens"],
                "temperature": q["temperature"]}
        if "seed" in q:
            body["seed"] = q["seed"]
        r = requests.post(f"{UPSTREAM}/v1/chat/completions", json=body).json()
        return jsonify(text=r["choices"][0]["message"]["content"])

    app.run(port=8089)
)";

grg::Split split_or_throw(const std::string& s) { return grg::parse_split(s); }

std::vector<grg::QAExample> load_split(const std::filesystem::path& path,
                                       const std::string& split) {
    grg::Dataset ds = grg::load_dataset(path, path.stem().string());
    if (split == "all") return std::move(ds.examples);
    const grg::Split wanted = split_or_throw(split);
    std::vector<grg::QAExample> out;
    for (auto& ex : ds.examples) {
        if (ex.split == wanted) out.push_back(std::move(ex));
    }
    if (out.empty()) throw grg::Error("no questions in split '" + split + "'");
    return out;
}

struct ConvertArgs {
    std::string from;
    std::string in;
    std::string out;
    std::string split = "test";
    std::string prefix;
};

int run_convert(const ConvertArgs& args) {
    const std::string prefix =
        args.prefix.empty() ? std::filesystem::path(args.in).stem().string() : args.prefix;
    const auto examples = grg::convert_upstream(args.in, grg::parse_style(args.from),
                                                split_or_throw(args.split), prefix);
    grg::save_dataset(examples, args.out);
    std::cout << "converted " << examples.size() << " records to " << args.out << "\n";
    return 0;
}

struct IndexArgs {
    std::string corpus;
    std::string out;
    grg::EmbedderConfig embedder;
    std::string provider = "mock";
};

int run_index(IndexArgs args) {
    args.embedder.provider =
        args.provider == "remote" ? grg::EmbedProvider::remote : grg::EmbedProvider::mock;
    const grg::IndexSummary summary = grg::build_corpus_index(args.corpus, args.embedder, args.out);
    json j;
    j["count"] = summary.count;
    j["dim"] = summary.dim;
    std::cout << j.dump() << "\n";
    return 0;
}

struct GenerateDocsArgs {
    std::string dataset;
    std::string out;
    std::string split = "all";
    grg::GenerationConfig gen;
    std::string provider = "mock";
    int num = 10;
};

int run_generate_docs(GenerateDocsArgs args) {
    args.gen.provider =
        args.provider == "remote" ? grg::GenProvider::remote : grg::GenProvider::mock;
    args.gen.num_documents = args.num;
    const grg::GenerationClient client(args.gen, grg::GenRole::document_generator);
    const auto questions = load_split(args.dataset, args.split);

    std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
    if (!out) throw grg::Error("cannot write " + args.out);
    for (const auto& q : questions) {
        const auto docs = client.generate_documents(q.id, q.question);
        json docs_json = json::array();
        for (const auto& d : docs) {
            json dj;
            dj["doc_id"] = d.doc_id;
            dj["text"] = d.text;
            docs_json.push_back(dj);
        }
        json line;
        line["question_id"] = q.id;
        line["docs"] = docs_json;
        out << line.dump() << "\n";
    }
    std::cout << "generated " << args.num << " documents for " << questions.size()
              << " questions\n";
    return 0;
}

struct RetrieveArgs {
    std::string index;
    std::string questions;
    std::string out;
    std::string split = "all";
    int k = 5;
    grg::EmbedderConfig embedder;
    std::string provider = "mock";
};

int run_retrieve(RetrieveArgs args) {
    const grg::VectorIndex index = grg::VectorIndex::load(args.index);
    args.embedder.provider =
        args.provider == "remote" ? grg::EmbedProvider::remote : grg::EmbedProvider::mock;
    args.embedder.dim = index.dim();
    args.embedder.allow_custom_dim = true;
    grg::DualEncoderConfig dual;
    dual.question_embedder = args.embedder;
    dual.document_embedder = args.embedder;

    const auto questions = load_split(args.questions, args.split);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!args.out.empty()) {
        file.open(args.out, std::ios::binary | std::ios::trunc);
        if (!file) throw grg::Error("cannot write " + args.out);
        out = &file;
    }
    for (const auto& q : questions) {
        const grg::EvidenceSet ev = grg::dense_retrieve(index, q.question, args.k, dual, q.id);
        json docs = json::array();
        for (const auto& d : ev.documents) {
            json dj;
            dj["doc_id"] = d.doc_id;
            dj["text"] = d.text;
            dj["score"] = d.score;
            docs.push_back(dj);
        }
        json line;
        line["question_id"] = ev.question_id;
        line["documents"] = docs;
        *out << line.dump() << "\n";
    }
    return 0;
}

struct RunArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string dataset;
    std::string corpus_index;
    std::string out_dir;
    std::string split;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<int> parallelism;
    std::optional<int> docs;
    bool only_generated = false;
    bool only_retrieved = false;
    std::string recall_k;
};

int run_run(const RunArgs& args) {
    grg::PipelineConfig cfg = grg::load_pipeline_config(args.config);
    for (const auto& pair : args.sets) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw grg::Error("--set expects key=value, got '" + pair + "'");
        grg::apply_config_entry(cfg, pair.substr(0, eq), pair.substr(eq + 1));
    }
    if (!args.dataset.empty()) grg::apply_config_entry(cfg, "dataset_path", args.dataset);
    if (!args.corpus_index.empty())
        grg::apply_config_entry(cfg, "corpus_index_path", args.corpus_index);
    if (!args.out_dir.empty()) grg::apply_config_entry(cfg, "output_dir", args.out_dir);
    if (!args.split.empty()) grg::apply_config_entry(cfg, "split", args.split);
    if (args.seed) cfg.seed = *args.seed;
    if (args.threshold) cfg.similarity_threshold = *args.threshold;
    if (args.parallelism) cfg.parallelism = *args.parallelism;
    if (args.docs) {
        cfg.k_selected_generated = *args.docs;
        cfg.k_retrieved = *args.docs;
        if (cfg.num_generated < *args.docs) cfg.num_generated = *args.docs;
    }
    if (args.only_generated) cfg.only_generated = true;
    if (args.only_retrieved) cfg.only_retrieved = true;
    if (!args.recall_k.empty()) grg::apply_config_entry(cfg, "recall_k", args.recall_k);

    const grg::RunManifest manifest = grg::run_pipeline(cfg);
    json summary;
    summary["em"] = manifest.aggregate.metrics.em;
    summary["f1"] = manifest.aggregate.metrics.f1;
    summary["n"] = manifest.aggregate.metrics.n;
    summary["failed"] = manifest.aggregate.failed;
    json rg = json::object();
    for (const auto& [k, v] : manifest.aggregate.recall_generated) rg[std::to_string(k)] = v;
    json rr = json::object();
    for (const auto& [k, v] : manifest.aggregate.recall_retrieved) rr[std::to_string(k)] = v;
    summary["recall_generated"] = rg;
    summary["recall_retrieved"] = rr;
    summary["manifest"] = (cfg.output_dir / "manifest.jsonl").string();
    std::cout << summary.dump() << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string predictions;
    std::string dataset;
    bool per_question = false;
};

int run_evaluate(const EvaluateArgs& args) {
    const grg::Dataset ds = grg::load_dataset(args.dataset,
                                              std::filesystem::path(args.dataset).stem().string());
    std::map<std::string, const grg::QAExample*> by_id;
    for (const auto& ex : ds.examples) by_id[ex.id] = &ex;

    std::ifstream in(args.predictions);
    if (!in) throw grg::Error("cannot open predictions file: " + args.predictions);

    std::vector<grg::QuestionScore> scores;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, bool> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw grg::Error("malformed prediction at line " + std::to_string(line_no) + ": " +
                             e.what());
        }
        const std::string qid = j.at("question_id").get<std::string>();
        const std::string prediction = j.at("prediction").get<std::string>();
        const auto it = by_id.find(qid);
        if (it == by_id.end()) throw grg::Error("prediction for unknown question '" + qid + "'");
        if (seen[qid]) throw grg::Error("duplicate prediction for question '" + qid + "'");
        seen[qid] = true;
        grg::QuestionScore score;
        score.em = grg::exact_match(prediction, it->second->answers);
        score.f1 = grg::f1_score(prediction, it->second->answers);
        if (args.per_question) {
            json pj;
            pj["question_id"] = qid;
            pj["em"] = score.em;
            pj["f1"] = score.f1;
            std::cout << pj.dump() << "\n";
        }
        scores.push_back(score);
    }
    if (scores.empty()) throw grg::Error("no predictions to evaluate");
    const grg::MetricReport report = grg::aggregate_metrics(scores);
    json out;
    out["em"] = report.em;
    out["f1"] = report.f1;
    out["n"] = report.n;
    std::cout << out.dump() << "\n";
    return 0;
}

int run_replay(const std::string& manifest_path) {
    const grg::MetricReport report = grg::replay(manifest_path);
    json out;
    out["em"] = report.em;
    out["f1"] = report.f1;
    out["n"] = report.n;
    std::cout << out.dump() << "\n";
    std::cout << "replay OK\n";
    return 0;
}

int run_cost(const std::string& profile_path) {
    std::ifstream in(profile_path);
    if (!in) throw grg::Error("cannot open profile file: " + profile_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw grg::Error(std::string("malformed cost profile: ") + e.what());
    }
    grg::CostProfile profile;
    profile.params = j.value("params", profile.params);
    profile.tokens_per_doc = j.value("tokens_per_doc", profile.tokens_per_doc);
    profile.n_docs = j.value("n_docs", profile.n_docs);
    profile.embed_dim = j.value("embed_dim", profile.embed_dim);
    profile.corpus_size = j.value("corpus_size", profile.corpus_size);
    profile.query_tokens = j.value("query_tokens", profile.query_tokens);
    std::cout << grg::render_cost_table(profile);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate-then-retrieve question answering pipeline"};
    app.require_subcommand(1);

    ConvertArgs convert_args;
    auto* convert = app.add_subcommand("convert", "Convert an upstream dataset file");
    convert->add_option("--from", convert_args.from, "Upstream style: dpr-json or qas-tsv")
        ->required();
    convert->add_option("--in", convert_args.in, "Input file")->required();
    convert->add_option("--out", convert_args.out, "Output dataset file")->required();
    convert->add_option("--split", convert_args.split, "Split to assign (train|dev|test)");
    convert->add_option("--prefix", convert_args.prefix, "Id prefix (default: input stem)");

    IndexArgs index_args;
    auto* index = app.add_subcommand("index", "Embed a corpus file and persist a vector index");
    index->add_option("--corpus", index_args.corpus, "Corpus file of {doc_id, text} lines")
        ->required();
    index->add_option("--out", index_args.out, "Index output path")->required();
    index->add_option("--dim", index_args.embedder.dim, "Embedding dimension");
    index->add_flag("--allow-custom-dim", index_args.embedder.allow_custom_dim,
                    "Allow dimensions other than 384/768");
    index->add_option("--provider", index_args.provider, "mock or remote");
    index->add_option("--endpoint", index_args.embedder.endpoint, "Embedding endpoint URL");
    index->add_option("--model", index_args.embedder.model_name, "Model name");
    index->add_option("--max-input-tokens", index_args.embedder.max_input_tokens,
                      "Token cap per document");

    GenerateDocsArgs gen_args;
    auto* gen = app.add_subcommand("generate-docs", "Generate background documents per question");
    gen->add_option("--dataset", gen_args.dataset, "Dataset file")->required();
    gen->add_option("--out", gen_args.out, "Output file")->required();
    gen->add_option("--split", gen_args.split, "Split filter (train|dev|test|all)");
    gen->add_option("--num", gen_args.num, "Documents per question");
    gen->add_option("--provider", gen_args.provider, "mock or remote");
    gen->add_option("--endpoint", gen_args.gen.endpoint, "Generation endpoint URL");
    gen->add_option("--model", gen_args.gen.model_name, "Model name");
    gen->add_option("--max-new-tokens", gen_args.gen.max_new_tokens, "Completion cap");
    gen->add_option("--temperature", gen_args.gen.temperature, "Sampling temperature");
    std::int64_t gen_seed = 0;
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Generation seed");

    RetrieveArgs retrieve_args;
    auto* retrieve = app.add_subcommand("retrieve", "Dense-retrieve evidence for questions");
    retrieve->add_option("--index", retrieve_args.index, "Corpus index path")->required();
    retrieve->add_option("--questions", retrieve_args.questions, "Dataset file")->required();
    retrieve->add_option("--k", retrieve_args.k, "Documents per question");
    retrieve->add_option("--split", retrieve_args.split, "Split filter (train|dev|test|all)");
    retrieve->add_option("--out", retrieve_args.out, "Output file (default: stdout)");
    retrieve->add_option("--provider", retrieve_args.provider, "mock or remote");
    retrieve->add_option("--endpoint", retrieve_args.embedder.endpoint, "Embedding endpoint URL");
    retrieve->add_option("--model", retrieve_args.embedder.model_name, "Model name");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run the full pipeline over a dataset split");
    run->add_option("--config", run_args.config, "Flat key=value config file")->required();
    run->add_option("--set", run_args.sets, "Override any config key (key=value, repeatable)");
    run->add_option("--dataset", run_args.dataset, "Dataset file");
    run->add_option("--corpus-index", run_args.corpus_index, "Corpus index path");
    run->add_option("--out-dir", run_args.out_dir, "Output directory");
    run->add_option("--split", run_args.split, "Split to evaluate (train|dev|test|all)");
    run->add_option("--seed", run_args.seed, "Run seed");
    run->add_option("--threshold", run_args.threshold, "Similarity threshold");
    run->add_option("--parallelism", run_args.parallelism, "Worker count");
    run->add_option("--docs", run_args.docs, "Evidence documents per stage (ablation: 2 or 5)")
        ->check(CLI::IsMember({2, 5}));
    run->add_flag("--only-generated", run_args.only_generated, "Skip corpus retrieval");
    run->add_flag("--only-retrieved", run_args.only_retrieved, "Skip document generation");
    run->add_option("--recall-k", run_args.recall_k, "Recall cutoffs, comma-separated");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score a predictions file against a dataset");
    evaluate->add_option("--predictions", eval_args.predictions, "Predictions file")->required();
    evaluate->add_option("--dataset", eval_args.dataset, "Dataset file")->required();
    evaluate->add_flag("--per-question", eval_args.per_question, "Emit one line per question");

    std::string replay_manifest;
    auto* replay = app.add_subcommand("replay", "Recompute a manifest's aggregate metrics");
    replay->add_option("--manifest", replay_manifest, "Manifest path")->required();

    std::string cost_profile;
    auto* cost = app.add_subcommand("cost", "Estimate FLOPs for a cost profile");
    cost->add_option("--profile", cost_profile, "Cost profile JSON file")->required();

    auto* adapter = app.add_subcommand("adapter", "Describe fronting an OpenAI-style endpoint");

    CLI11_PARSE(app, argc, argv);

    try {
        if (convert->parsed()) return run_convert(convert_args);
        if (index->parsed()) return run_index(index_args);
        if (gen->parsed()) {
            if (gen_seed_opt->count() > 0) gen_args.gen.seed = gen_seed;
            return run_generate_docs(gen_args);
        }
        if (retrieve->parsed()) return run_retrieve(retrieve_args);
        if (run->parsed()) return run_run(run_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
        if (replay->parsed()) return run_replay(replay_manifest);
        if (cost->parsed()) return run_cost(cost_profile);
        if (adapter->parsed()) {
            std::cout << kAdapterGuide;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
