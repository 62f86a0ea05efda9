#include <cmath>

#include "doctest.h"

#include "grg/embedder.hpp"
#include "grg/error.hpp"
#include "oracle.hpp"

using namespace grg;

namespace {

Embedder mock_embedder(int dim = 384) {
  EmbedderConfig cfg;
  cfg.provider = EmbedProvider::mock;
  cfg.dim = dim;
  if (dim != 384 && dim != 768) cfg.allow_custom_dim = true;
  return Embedder(cfg);
}

double norm_of(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("config validation") {
  EmbedderConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dim = 768;
  CHECK_NOTHROW(cfg.validate());

  cfg.dim = 123;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("custom-dimension override"), Error);
  cfg.allow_custom_dim = true;
  CHECK_NOTHROW(cfg.validate());

  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.dim = 384;
  cfg.max_input_tokens = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_input_tokens = 512;
  cfg.max_inflight = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_inflight = 4;
  cfg.retry_base_ms = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.retry_base_ms = 0;
  cfg.timeout_ms = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("mock embedding is deterministic") {
  const Embedder a = mock_embedder();
  const Embedder b = mock_embedder();
  const EmbeddingVector v1 = a.embed_text("hello");
  const EmbeddingVector v2 = a.embed_text("hello");
  const EmbeddingVector v3 = b.embed_text("hello");
  CHECK(v1.values == v2.values);
  CHECK(v1.values == v3.values);
}

TEST_CASE("trailing and leading whitespace is trimmed before embedding") {
  const Embedder e = mock_embedder();
  CHECK(e.embed_text("hello").values == e.embed_text(" hello ").values);
  CHECK(e.embed_text("hello").values == e.embed_text("\thello\n").values);
}

TEST_CASE("embedding depends on the token multiset only") {
  const Embedder e = mock_embedder();
  CHECK(e.embed_text("a b").values == e.embed_text("a \t b").values);
  // Bag semantics: order does not matter, token identity and count do.
  CHECK(e.embed_text("a b").values == e.embed_text("b a").values);
  CHECK(e.embed_text("ab").values != e.embed_text("a b").values);
  CHECK(e.embed_text("a a b").values != e.embed_text("a b").values);
}

TEST_CASE("mock embeddings are unit-norm") {
  const Embedder e = mock_embedder();
  oracle::Rng rng(41);
  for (int i = 0; i < 25; ++i) {
    const EmbeddingVector v = e.embed_text(rng.sentence(1 + static_cast<int>(rng.below(12))));
    CHECK(std::abs(norm_of(v) - 1.0) < 1e-9);
  }
}

TEST_CASE("dimension law") {
  CHECK(mock_embedder(384).embed_text("x").dim() == 384);
  CHECK(mock_embedder(768).embed_text("x").dim() == 768);
  CHECK(mock_embedder(16).embed_text("x").dim() == 16);
}

TEST_CASE("empty text is rejected") {
  const Embedder e = mock_embedder();
  CHECK_THROWS_WITH_AS(e.embed_text(""), "cannot embed empty text", Error);
  CHECK_THROWS_WITH_AS(e.embed_text("   \t\n"), "cannot embed empty text", Error);
}

TEST_CASE("batch embedding preserves order and matches single calls") {
  const Embedder e = mock_embedder();
  const std::vector<std::string> texts = {"first doc", "second doc", "third doc"};
  const auto batch = e.embed_batch(texts);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(batch[i].values == e.embed_text(texts[i]).values);
  }
}

TEST_CASE("empty batch yields empty result") {
  CHECK(mock_embedder().embed_batch({}).empty());
}

TEST_CASE("batch failure names the failing index") {
  const Embedder e = mock_embedder();
  CHECK_THROWS_WITH_AS(e.embed_batch({"ok", "  ", "also ok"}),
                       "cannot embed empty text at batch index 1", Error);
}

TEST_CASE("truncation caps whitespace tokens") {
  SUBCASE("short text passes through") {
    const TruncationResult r = truncate_to_tokens("one two three", 5);
    CHECK(r.text == "one two three");
    CHECK_FALSE(r.truncated);
  }
  SUBCASE("long text is cut at a token boundary") {
    const TruncationResult r = truncate_to_tokens("one two three four", 2);
    CHECK(r.text == "one two");
    CHECK(r.truncated);
  }
  SUBCASE("internal whitespace of the kept prefix is preserved") {
    const TruncationResult r = truncate_to_tokens("a  b   c", 2);
    CHECK(r.text == "a  b");
    CHECK(r.truncated);
  }
  SUBCASE("exactly max tokens is not truncated") {
    const TruncationResult r = truncate_to_tokens("a b c", 3);
    CHECK(r.text == "a b c");
    CHECK_FALSE(r.truncated);
  }
  SUBCASE("surrounding whitespace alone is not truncation") {
    const TruncationResult r = truncate_to_tokens("  a b  ", 2);
    CHECK(r.text == "a b");
    CHECK_FALSE(r.truncated);
  }
  CHECK_THROWS_AS(truncate_to_tokens("x", 0), Error);
}

TEST_CASE("embedding truncates long input at the configured cap") {
  EmbedderConfig cfg;
  cfg.max_input_tokens = 4;
  const Embedder e(cfg);

  const std::string kept = "w0 w1 w2 w3";
  CHECK(e.embed_text(kept + " w4 w5 w6").values == e.embed_text(kept).values);
}

TEST_CASE("default cap is 512 tokens") {
  EmbedderConfig cfg;
  CHECK(cfg.max_input_tokens == 512);
  std::string text;
  for (int i = 0; i < 600; ++i) text += "tok" + std::to_string(i) + " ";
  const TruncationResult r = truncate_to_tokens(text, cfg.max_input_tokens);
  CHECK(r.truncated);
  std::size_t tokens = 0;
  bool in_token = false;
  for (char c : r.text) {
    const bool space = c == ' ';
    if (!space && !in_token) ++tokens;
    in_token = !space;
  }
  CHECK(tokens == 512);
}
