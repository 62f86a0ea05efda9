#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "grg/corpus.hpp"
#include "grg/cost.hpp"
#include "grg/embedder.hpp"
#include "grg/error.hpp"
#include "grg/generator.hpp"
#include "grg/metrics.hpp"
#include "grg/pipeline.hpp"
#include "grg/retriever.hpp"
#include "grg/vindex.hpp"

namespace py = pybind11;

namespace {

grg::EmbeddingVector as_vector(const std::vector<double>& values) {
    grg::EmbeddingVector v;
    v.values = values;
    return v;
}

std::vector<grg::EmbeddingVector> as_vectors(const std::vector<std::vector<double>>& rows) {
    std::vector<grg::EmbeddingVector> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(as_vector(r));
    return out;
}

grg::DocSource parse_source(const std::string& s) {
    if (s == "generated") return grg::DocSource::generated;
    if (s == "corpus") return grg::DocSource::corpus;
    throw grg::Error("unknown document source '" + s + "'");
}

} // namespace

PYBIND11_MODULE(_grg, m) {
    m.doc() = "Generate-then-retrieve question answering core";

    m.def("cosine_similarity",
          [](const std::vector<double>& q, const std::vector<double>& d) {
              return grg::cosine_similarity(as_vector(q), as_vector(d));
          },
          py::arg("q"), py::arg("d"));

    m.def("dot_score",
          [](const std::vector<double>& q, const std::vector<double>& d) {
              return grg::dot_score(as_vector(q), as_vector(d));
          },
          py::arg("q"), py::arg("d"));

    m.def("cosine_loss",
          [](const std::vector<std::vector<double>>& hidden,
             const std::vector<std::vector<double>>& target, double tau) {
              return grg::cosine_loss(as_vectors(hidden), as_vectors(target), tau);
          },
          py::arg("hidden"), py::arg("target"), py::arg("tau") = 1.0);

    m.def("normalize_answer", &grg::normalize_answer, py::arg("text"));
    m.def("exact_match", &grg::exact_match, py::arg("prediction"), py::arg("answers"));
    m.def("f1_score", &grg::f1_score, py::arg("prediction"), py::arg("answers"));
    m.def("recall_at_k", &grg::recall_at_k, py::arg("ranked_doc_texts"), py::arg("answers"),
          py::arg("k"));

    m.def("build_doc_prompt", &grg::build_doc_prompt, py::arg("question"));
    m.def("assemble_reader_prompt",
          [](const std::string& question, const std::vector<std::string>& retrieved,
             const std::vector<std::string>& generated) {
              return grg::assemble_reader_prompt(question, retrieved, generated).rendered;
          },
          py::arg("question"), py::arg("retrieved"), py::arg("generated"));

    m.def("flops_generate", &grg::flops_generate, py::arg("params"), py::arg("n_docs"),
          py::arg("tokens_per_doc"));
    m.def("flops_encode_corpus", &grg::flops_encode_corpus, py::arg("params"),
          py::arg("corpus_size"), py::arg("tokens_per_doc"));
    m.def("flops_retrieve", &grg::flops_retrieve, py::arg("params"), py::arg("query_tokens"),
          py::arg("corpus_size"), py::arg("embed_dim"));
    m.def("asymptotic_class",
          [](const std::string& stage) { return grg::asymptotic_class(grg::parse_stage(stage)); },
          py::arg("stage"));

    m.def("embed_text",
          [](const std::string& text, int dim) {
              grg::EmbedderConfig cfg;
              cfg.dim = dim;
              cfg.allow_custom_dim = true;
              return grg::Embedder(cfg).embed_text(text).values;
          },
          py::arg("text"), py::arg("dim") = 384, "Deterministic offline embedding");

    m.def("truncate_to_tokens",
          [](const std::string& text, int max_tokens) {
              const grg::TruncationResult r = grg::truncate_to_tokens(text, max_tokens);
              return py::make_tuple(r.text, r.truncated);
          },
          py::arg("text"), py::arg("max_tokens"));

    py::class_<grg::ScoredDocument>(m, "ScoredDocument")
        .def_readonly("doc_id", &grg::ScoredDocument::doc_id)
        .def_readonly("score", &grg::ScoredDocument::score)
        .def("__repr__", [](const grg::ScoredDocument& d) {
            return "ScoredDocument(doc_id='" + d.doc_id + "', score=" + std::to_string(d.score) +
                   ")";
        });

    py::class_<grg::VectorIndex>(m, "VectorIndex")
        .def(py::init<int>(), py::arg("dim"))
        .def("add",
             [](grg::VectorIndex& index, const std::string& doc_id, const std::string& text,
                const std::vector<double>& values, const std::string& source) {
                 grg::EmbeddedDocument doc;
                 doc.doc_id = doc_id;
                 doc.text = text;
                 doc.vector = as_vector(values);
                 doc.source = parse_source(source);
                 index.add({doc});
             },
             py::arg("doc_id"), py::arg("text"), py::arg("values"),
             py::arg("source") = "generated")
        .def("retrieve_top_k",
             [](const grg::VectorIndex& index, const std::vector<double>& q, int k,
                double threshold) { return index.retrieve_top_k(as_vector(q), k, threshold); },
             py::arg("q"), py::arg("k"), py::arg("threshold") = 0.7)
        .def("save", &grg::VectorIndex::save, py::arg("path"))
        .def_static("load", &grg::VectorIndex::load, py::arg("path"))
        .def_property_readonly("dim", &grg::VectorIndex::dim)
        .def("__len__", &grg::VectorIndex::size);

    m.attr("__version__") = "0.1.0";
}
