#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

#include "grg/error.hpp"
#include "grg/generator.hpp"
#include "grg/vindex.hpp"
#include "oracle.hpp"

using namespace grg;

namespace {

EmbeddingVector vec(std::vector<double> values) {
  EmbeddingVector v;
  v.values = std::move(values);
  return v;
}

GenerationConfig mock_gen(int num_documents = 10, std::int64_t seed = 0) {
  GenerationConfig cfg;
  cfg.provider = GenProvider::mock;
  cfg.num_documents = num_documents;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("document prompt template") {
  CHECK(build_doc_prompt("who wrote hamlet?") ==
        "Generate a background document to answer the given question: who wrote hamlet?");
  CHECK(build_doc_prompt("a\nb") ==
        "Generate a background document to answer the given question: a\nb");
  CHECK_THROWS_WITH_AS(build_doc_prompt(""), "cannot build a prompt for an empty question", Error);
  CHECK_THROWS_WITH_AS(build_doc_prompt("  \t "), "cannot build a prompt for an empty question",
                       Error);
}

TEST_CASE("reader prompt assembly goldens") {
  SUBCASE("one retrieved and one generated") {
    const ReaderPrompt p = assemble_reader_prompt("q?", {"ret one"}, {"gen one"});
    CHECK(p.rendered == "q?\nret one\ngen one\n</s>");
    CHECK(p.question == "q?");
    CHECK(p.retrieved_docs == std::vector<std::string>{"ret one"});
    CHECK(p.generated_docs == std::vector<std::string>{"gen one"});
  }
  SUBCASE("retrieved docs precede generated docs in order") {
    const ReaderPrompt p = assemble_reader_prompt("q?", {"r1", "r2"}, {"g1", "g2"});
    CHECK(p.rendered == "q?\nr1\nr2\ng1\ng2\n</s>");
  }
  SUBCASE("only generated") {
    CHECK(assemble_reader_prompt("q?", {}, {"g1"}).rendered == "q?\ng1\n</s>");
  }
  SUBCASE("only retrieved") {
    CHECK(assemble_reader_prompt("q?", {"r1"}, {}).rendered == "q?\nr1\n</s>");
  }
}

TEST_CASE("reader prompt assembly is a pure function of its inputs") {
  const ReaderPrompt a = assemble_reader_prompt("why is the sky blue?", {"scatter"}, {"optics"});
  const ReaderPrompt b = assemble_reader_prompt("why is the sky blue?", {"scatter"}, {"optics"});
  CHECK(a.rendered == b.rendered);
}

TEST_CASE("reader prompt assembly error cases") {
  CHECK_THROWS_WITH_AS(assemble_reader_prompt("q?", {}, {}), "no evidence", Error);
  CHECK_THROWS_WITH_AS(assemble_reader_prompt(" ", {"r"}, {}),
                       "cannot assemble a prompt for an empty question", Error);
}

TEST_CASE("cosine loss of a single aligned pair is zero") {
  const std::vector<EmbeddingVector> h = {vec({3, 4})};
  CHECK(cosine_loss(h, h, 1.0) == 0.0);
  CHECK(cosine_loss(h, h, 0.25) == 0.0);
}

TEST_CASE("cosine loss of two orthonormal pairs at tau 1") {
  const std::vector<EmbeddingVector> h = {vec({1, 0}), vec({0, 1})};
  const double loss = cosine_loss(h, h, 1.0);
  CHECK(std::abs(loss - std::log1p(std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(loss - 0.3132616875182228) < 1e-9);
}

TEST_CASE("cosine loss is invariant under a joint permutation of the pairs") {
  oracle::Rng rng(41);
  std::vector<EmbeddingVector> h, t;
  for (int i = 0; i < 6; ++i) {
    h.push_back(vec(rng.nonzero_vec(5)));
    t.push_back(vec(rng.nonzero_vec(5)));
  }
  const double base = cosine_loss(h, t, 0.7);

  const std::vector<std::size_t> perm = {4, 0, 5, 2, 1, 3};
  std::vector<EmbeddingVector> hp, tp;
  for (std::size_t i : perm) {
    hp.push_back(h[i]);
    tp.push_back(t[i]);
  }
  CHECK(std::abs(cosine_loss(hp, tp, 0.7) - base) < 1e-9);
}

TEST_CASE("cosine loss is never negative") {
  oracle::Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int dim = 2 + static_cast<int>(rng.below(8));
    std::vector<EmbeddingVector> h, t;
    for (int i = 0; i < n; ++i) {
      h.push_back(vec(rng.nonzero_vec(dim)));
      t.push_back(vec(rng.nonzero_vec(dim)));
    }
    const double tau = 0.1 + rng.below(20) * 0.1;
    CHECK(cosine_loss(h, t, tau) >= 0.0);
  }
}

TEST_CASE("cosine loss ignores vector magnitudes") {
  const std::vector<EmbeddingVector> h = {vec({1, 2, 2}), vec({-2, 0, 1})};
  const std::vector<EmbeddingVector> t = {vec({0, 1, 1}), vec({1, 1, 0})};
  const double base = cosine_loss(h, t, 0.5);

  std::vector<EmbeddingVector> h2 = h;
  for (double& x : h2[0].values) x *= 2.0;
  CHECK(cosine_loss(h2, t, 0.5) == base);
}

TEST_CASE("cosine loss error cases") {
  const std::vector<EmbeddingVector> one = {vec({1, 0})};
  const std::vector<EmbeddingVector> two = {vec({1, 0}), vec({0, 1})};
  CHECK_THROWS_WITH_AS(cosine_loss({}, {}, 1.0), "cosine loss requires at least one pair", Error);
  CHECK_THROWS_WITH_AS(cosine_loss(two, one, 1.0), "cosine loss length mismatch: 2 vs 1", Error);
  CHECK_THROWS_WITH_AS(cosine_loss(one, one, 0.0), "cosine loss temperature must be > 0", Error);
  CHECK_THROWS_AS(cosine_loss(one, one, -1.0), Error);
}

TEST_CASE("generation config validation") {
  CHECK_NOTHROW(mock_gen().validate());

  GenerationConfig cfg = mock_gen(0);
  CHECK_THROWS_WITH_AS(cfg.validate(), "num_documents must be >= 1", Error);

  cfg = mock_gen(51);
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("exceeds the cap of 50"), Error);
  cfg.override_doc_cap = true;
  CHECK_NOTHROW(cfg.validate());

  cfg = mock_gen();
  cfg.temperature = -0.1;
  CHECK_THROWS_WITH_AS(cfg.validate(), "temperature must be >= 0", Error);

  cfg = mock_gen();
  cfg.max_new_tokens = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = mock_gen();
  cfg.max_inflight = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = mock_gen();
  cfg.retry_base_ms = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = mock_gen();
  cfg.timeout_ms = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  CHECK_THROWS_AS(GenerationClient(mock_gen(0), GenRole::document_generator), Error);
}

TEST_CASE("mock document generation") {
  const GenerationClient client(mock_gen(10, 7), GenRole::document_generator);
  const auto docs = client.generate_documents("q1", "who discovered penicillin?");
  REQUIRE(docs.size() == 10);

  SUBCASE("ids follow gen-{question_id}-{i}") {
    for (int i = 0; i < 10; ++i) CHECK(docs[i].doc_id == "gen-q1-" + std::to_string(i));
  }
  SUBCASE("each document embeds its index and the question verbatim") {
    for (int i = 0; i < 10; ++i) {
      const std::string prefix =
          "Background document " + std::to_string(i) + " for: who discovered penicillin? It covers";
      CHECK(docs[i].text.rfind(prefix, 0) == 0);
      CHECK(docs[i].text.back() == '.');
    }
  }
  SUBCASE("documents are pairwise distinct") {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (std::size_t j = i + 1; j < docs.size(); ++j) CHECK(docs[i].text != docs[j].text);
    }
  }
  SUBCASE("a fixed seed reproduces the same documents") {
    const GenerationClient again(mock_gen(10, 7), GenRole::document_generator);
    const auto redo = again.generate_documents("q1", "who discovered penicillin?");
    REQUIRE(redo.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      CHECK(redo[i].doc_id == docs[i].doc_id);
      CHECK(redo[i].text == docs[i].text);
    }
  }
  SUBCASE("a different seed changes at least one document") {
    const GenerationClient other(mock_gen(10, 8), GenRole::document_generator);
    const auto diff = other.generate_documents("q1", "who discovered penicillin?");
    bool any_changed = false;
    for (std::size_t i = 0; i < docs.size(); ++i) any_changed |= diff[i].text != docs[i].text;
    CHECK(any_changed);
  }
}

TEST_CASE("mock generation without a seed behaves as seed zero") {
  GenerationConfig unseeded = mock_gen(3, 0);
  unseeded.seed.reset();
  const auto a = GenerationClient(unseeded, GenRole::document_generator)
                     .generate_documents("q", "where is the nile?");
  const auto b = GenerationClient(mock_gen(3, 0), GenRole::document_generator)
                     .generate_documents("q", "where is the nile?");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
}

TEST_CASE("mock generation rejects an empty question") {
  const GenerationClient client(mock_gen(2), GenRole::document_generator);
  CHECK_THROWS_WITH_AS(client.generate_documents("q1", "  "),
                       "cannot build a prompt for an empty question", Error);
}

TEST_CASE("mock reader extracts the first double-quoted span") {
  const GenerationClient reader(mock_gen(1), GenRole::reader);
  SUBCASE("span inside the question") {
    const ReaderPrompt p =
        assemble_reader_prompt("the sign is \"Scorpio\" right?", {"no quotes here"}, {});
    CHECK(reader.generate_answer(p) == "Scorpio");
  }
  SUBCASE("span inside a document") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {}, {"answer is \"42\" ok."});
    CHECK(reader.generate_answer(p) == "42");
  }
  SUBCASE("the earliest span wins") {
    const ReaderPrompt p =
        assemble_reader_prompt("say \"first\" please", {"then \"second\""}, {});
    CHECK(reader.generate_answer(p) == "first");
  }
  SUBCASE("the span is whitespace-trimmed") {
    const ReaderPrompt p = assemble_reader_prompt("mark \"  padded \" here", {"doc"}, {});
    CHECK(reader.generate_answer(p) == "padded");
  }
}

TEST_CASE("mock reader falls back to the first sentence of the evidence") {
  const GenerationClient reader(mock_gen(1), GenRole::reader);
  SUBCASE("first generated document") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {"retrieved text."},
                                                  {"The battle ended. More text follows."});
    CHECK(reader.generate_answer(p) == "The battle ended");
  }
  SUBCASE("question marks and exclamation points end a sentence") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {}, {"Really! And then"});
    CHECK(reader.generate_answer(p) == "Really");
  }
  SUBCASE("retrieved evidence when nothing was generated") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {"From the archive. Dated"}, {});
    CHECK(reader.generate_answer(p) == "From the archive");
  }
  SUBCASE("an unterminated quote is not a span") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {}, {"a \"dangling quote"});
    CHECK(reader.generate_answer(p) == "a \"dangling quote");
  }
  SUBCASE("a document without sentence punctuation is used whole") {
    const ReaderPrompt p = assemble_reader_prompt("plain question", {}, {"just words"});
    CHECK(reader.generate_answer(p) == "just words");
  }
}

TEST_CASE("mock reader error cases") {
  const GenerationClient reader(mock_gen(1), GenRole::reader);
  CHECK_THROWS_WITH_AS(reader.generate_answer(ReaderPrompt{}), "cannot answer an empty prompt",
                       Error);

  ReaderPrompt hollow;
  hollow.rendered = "x";
  hollow.question = "x";
  hollow.generated_docs = {"."};
  CHECK_THROWS_WITH_AS(reader.generate_answer(hollow), "mock reader produced an empty completion",
                       Error);
}
