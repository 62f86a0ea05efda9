#include <cmath>

#include "doctest.h"

#include "grg/error.hpp"
#include "grg/retriever.hpp"
#include "oracle.hpp"

using namespace grg;

namespace {

EmbeddingVector vec(std::vector<double> values) {
  EmbeddingVector v;
  v.values = std::move(values);
  return v;
}

EmbeddedDocument corpus_doc(const std::string& id, std::vector<double> values) {
  EmbeddedDocument d;
  d.doc_id = id;
  d.text = "corpus text " + id;
  d.vector = vec(std::move(values));
  d.source = DocSource::corpus;
  return d;
}

EmbedderConfig mock_cfg(int dim = 384) {
  EmbedderConfig cfg;
  cfg.provider = EmbedProvider::mock;
  cfg.dim = dim;
  if (dim != 384 && dim != 768) cfg.allow_custom_dim = true;
  return cfg;
}

}  // namespace

TEST_CASE("dot product examples") {
  CHECK(dot_score(vec({1, 2}), vec({3, 4})) == 11.0);
  CHECK(dot_score(vec({0, 0}), vec({5, -3})) == 0.0);
  CHECK(dot_score(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK_THROWS_WITH_AS(dot_score(vec({1}), vec({1, 2})), doctest::Contains("dimension mismatch"),
                       Error);
}

TEST_CASE("dot product is bilinear") {
  oracle::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const int dim = 2 + static_cast<int>(rng.below(20));
    const auto a = rng.vec(dim);
    const auto b = rng.vec(dim);
    const auto c = rng.vec(dim);
    const double alpha = rng.signed_unit() * 3.0;

    std::vector<double> combo(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) combo[j] = alpha * a[j] + b[j];
    const double lhs = dot_score(vec(combo), vec(c));
    const double rhs = alpha * dot_score(vec(a), vec(c)) + dot_score(vec(b), vec(c));
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("dual encoder config validation") {
  DualEncoderConfig cfg;
  cfg.question_embedder = mock_cfg(384);
  cfg.document_embedder = mock_cfg(384);
  CHECK_NOTHROW(cfg.validate());

  cfg.document_embedder = mock_cfg(768);
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("share one dim"), Error);
}

TEST_CASE("rank_by_dot worked example") {
  VectorIndex index(2);
  index.add({corpus_doc("a", {1, 0}), corpus_doc("b", {0, 2})});
  const EvidenceSet ev = rank_by_dot(index, vec({0, 1}), 1, "q1");
  CHECK(ev.question_id == "q1");
  REQUIRE(ev.documents.size() == 1);
  CHECK(ev.documents[0].doc_id == "b");
  CHECK(ev.documents[0].score == 2.0);
  CHECK(ev.documents[0].text == "corpus text b");
}

TEST_CASE("rank_by_dot caps k at the corpus size and sorts") {
  VectorIndex index(2);
  index.add({corpus_doc("a", {1, 0}), corpus_doc("b", {0, 2}), corpus_doc("c", {2, 2})});
  const EvidenceSet ev = rank_by_dot(index, vec({1, 1}), 10);
  REQUIRE(ev.documents.size() == 3);
  CHECK(ev.documents[0].doc_id == "c");  // 4
  CHECK(ev.documents[1].doc_id == "b");  // 2
  CHECK(ev.documents[2].doc_id == "a");  // 1
  for (std::size_t i = 1; i < ev.documents.size(); ++i) {
    CHECK(ev.documents[i - 1].score >= ev.documents[i].score);
  }
}

TEST_CASE("identical vectors rank by ascending doc_id") {
  VectorIndex index(2);
  index.add({corpus_doc("m", {1, 1}), corpus_doc("a", {1, 1}), corpus_doc("z", {1, 1})});
  const EvidenceSet ev = rank_by_dot(index, vec({1, 0}), 3);
  REQUIRE(ev.documents.size() == 3);
  CHECK(ev.documents[0].doc_id == "a");
  CHECK(ev.documents[1].doc_id == "m");
  CHECK(ev.documents[2].doc_id == "z");
}

TEST_CASE("rank_by_dot error cases") {
  VectorIndex empty(2);
  CHECK_THROWS_WITH_AS(rank_by_dot(empty, vec({1, 0}), 1), "no evidence corpus", Error);
  VectorIndex index(2);
  index.add({corpus_doc("a", {1, 0})});
  CHECK_THROWS_AS(rank_by_dot(index, vec({1, 0}), 0), Error);
}

TEST_CASE("rank_by_dot equals the brute-force oracle") {
  oracle::Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(24));
    const int count = 1 + static_cast<int>(rng.below(120));
    VectorIndex index(dim);
    std::vector<EmbeddedDocument> docs;
    for (int i = 0; i < count; ++i) docs.push_back(corpus_doc("d" + std::to_string(i), rng.vec(dim)));
    index.add(docs);

    const auto q = rng.vec(dim);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(count) + 4));

    std::vector<oracle::Scored> scored;
    for (const auto& e : index.entries()) scored.push_back({e.doc_id, oracle::dot(q, e.vector.values)});
    const auto expected = oracle::top_k(std::move(scored), k);
    const EvidenceSet actual = rank_by_dot(index, vec(q), k);

    REQUIRE(actual.documents.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(actual.documents[i].doc_id == expected[i].doc_id);
      CHECK(std::abs(actual.documents[i].score - expected[i].score) <= 1e-12);
    }
  }
}

TEST_CASE("scaling all document vectors preserves the ranking") {
  oracle::Rng rng(17);
  const int dim = 8;
  std::vector<EmbeddedDocument> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(corpus_doc("d" + std::to_string(i), rng.vec(dim)));

  VectorIndex plain(dim);
  plain.add(docs);
  for (auto& d : docs) {
    for (double& x : d.vector.values) x *= 2.0;
  }
  VectorIndex scaled(dim);
  scaled.add(docs);

  const auto q = rng.vec(dim);
  const EvidenceSet a = rank_by_dot(plain, vec(q), 10);
  const EvidenceSet b = rank_by_dot(scaled, vec(q), 10);
  REQUIRE(a.documents.size() == b.documents.size());
  for (std::size_t i = 0; i < a.documents.size(); ++i) {
    CHECK(a.documents[i].doc_id == b.documents[i].doc_id);
    CHECK(b.documents[i].score == 2.0 * a.documents[i].score);
  }
}

TEST_CASE("dense_retrieve embeds the question and ranks by dot product") {
  const EmbedderConfig ecfg = mock_cfg(384);
  const Embedder embedder(ecfg);
  const std::vector<std::string> texts = {"the river flows north", "a stone bridge",
                                          "rivers and their floods", "completely unrelated words"};
  VectorIndex index(384);
  std::vector<EmbeddedDocument> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EmbeddedDocument d;
    d.doc_id = "c" + std::to_string(i);
    d.text = texts[i];
    d.vector = embedder.embed_text(texts[i]);
    d.source = DocSource::corpus;
    docs.push_back(d);
  }
  index.add(docs);

  DualEncoderConfig dual;
  dual.question_embedder = ecfg;
  dual.document_embedder = ecfg;

  const std::string question = "where does the river flow?";
  const EvidenceSet ev = dense_retrieve(index, question, 2, dual, "q7");
  CHECK(ev.question_id == "q7");
  REQUIRE(ev.documents.size() == 2);

  const EvidenceSet manual = rank_by_dot(index, embedder.embed_text(question), 2, "q7");
  for (std::size_t i = 0; i < ev.documents.size(); ++i) {
    CHECK(ev.documents[i].doc_id == manual.documents[i].doc_id);
    CHECK(ev.documents[i].score == manual.documents[i].score);
  }
}

TEST_CASE("dense_retrieve error cases") {
  DualEncoderConfig dual;
  dual.question_embedder = mock_cfg(384);
  dual.document_embedder = mock_cfg(384);

  VectorIndex empty(384);
  CHECK_THROWS_WITH_AS(dense_retrieve(empty, "q?", 1, dual), "no evidence corpus", Error);

  VectorIndex small(16);
  EmbeddedDocument d;
  d.doc_id = "a";
  d.text = "t";
  d.vector = vec(std::vector<double>(16, 0.25));
  small.add({d});
  CHECK_THROWS_WITH_AS(dense_retrieve(small, "q?", 1, dual),
                       doctest::Contains("does not match corpus index dim"), Error);

  VectorIndex ok(384);
  EmbeddedDocument d2;
  d2.doc_id = "a";
  d2.text = "t";
  d2.vector = Embedder(mock_cfg(384)).embed_text("t");
  ok.add({d2});
  CHECK_THROWS_AS(dense_retrieve(ok, "q?", 0, dual), Error);
  CHECK_THROWS_AS(dense_retrieve(ok, "   ", 1, dual), Error);
}

TEST_CASE("unit-norm agreement between dot ranking and cosine retrieval") {
  const EmbedderConfig ecfg = mock_cfg(384);
  const Embedder embedder(ecfg);
  oracle::Rng rng(29);
  VectorIndex index(384);
  std::vector<EmbeddedDocument> docs;
  for (int i = 0; i < 25; ++i) {
    EmbeddedDocument d;
    d.doc_id = "u" + std::to_string(i);
    d.text = rng.sentence(4 + static_cast<int>(rng.below(6)));
    d.vector = embedder.embed_text(d.text);  // unit norm by construction
    d.source = DocSource::corpus;
    docs.push_back(d);
  }
  index.add(docs);

  const EmbeddingVector q = embedder.embed_text("river stone lantern query");
  const EvidenceSet by_dot = rank_by_dot(index, q, 10);
  const auto by_cos = index.retrieve_top_k(q, 10, -1.0);
  REQUIRE(by_dot.documents.size() == by_cos.size());
  for (std::size_t i = 0; i < by_cos.size(); ++i) {
    CHECK(by_dot.documents[i].doc_id == by_cos[i].doc_id);
  }
}
