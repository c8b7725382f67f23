#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "humorkit/embedding.hpp"
#include "humorkit/errors.hpp"

#include "helpers.hpp"

using namespace humorkit;

namespace {

std::string float_bytes(float v) {
  char raw[sizeof(float)];
  std::memcpy(raw, &v, sizeof(float));
  return std::string(raw, sizeof(float));
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("loads plain text embeddings") {
    testutil::TempDir dir("emb");
    testutil::write_file(dir.file("e.txt"), "cat 1 2 3\ndog 4 5 6\n");
    const EmbeddingMatrix m = load_text_embedding(dir.file("e.txt"));
    CHECK(m.size() == 2);
    CHECK(m.dim == 3);
    REQUIRE(lookup(m, "dog").has_value());
    CHECK((*lookup(m, "dog"))[2] == doctest::Approx(6.0f));
    CHECK_FALSE(lookup(m, "Dog").has_value());  // case-sensitive
  }

  TEST_CASE("treats a leading count/dim pair as a header") {
    testutil::TempDir dir("emb");
    testutil::write_file(dir.file("h.txt"), "2 3\ncat 1 2 3\ndog 4 5 6\n");
    const EmbeddingMatrix m = load_text_embedding(dir.file("h.txt"));
    CHECK(m.size() == 2);
    CHECK(m.dim == 3);
  }

  TEST_CASE("first duplicate wins and duplicates are tallied") {
    testutil::TempDir dir("emb");
    testutil::write_file(dir.file("d.txt"), "cat 1 2\ncat 9 9\ndog 3 4\n");
    EmbeddingLoadReport report;
    const EmbeddingMatrix m = load_text_embedding(dir.file("d.txt"), std::nullopt, &report);
    CHECK(m.size() == 2);
    CHECK(report.duplicate_tokens == 1);
    CHECK((*lookup(m, "cat"))[0] == doctest::Approx(1.0f));
  }

  TEST_CASE("rejects dimension mismatches and junk") {
    testutil::TempDir dir("emb");
    testutil::write_file(dir.file("m.txt"), "cat 1 2 3\ndog 4 5\n");
    CHECK_THROWS_AS(load_text_embedding(dir.file("m.txt")), DataError);
    testutil::write_file(dir.file("x.txt"), "cat 1 two 3\n");
    CHECK_THROWS_AS(load_text_embedding(dir.file("x.txt")), DataError);
    testutil::write_file(dir.file("empty.txt"), "");
    CHECK_THROWS_AS(load_text_embedding(dir.file("empty.txt")), DataError);
    testutil::write_file(dir.file("ok.txt"), "cat 1 2 3\n");
    CHECK_THROWS_AS(load_text_embedding(dir.file("ok.txt"), 5), DataError);
  }

  TEST_CASE("loads word2vec binary data") {
    testutil::TempDir dir("emb");
    std::string blob = "2 3\n";
    blob += "cat ";
    blob += float_bytes(1.0f) + float_bytes(2.0f) + float_bytes(3.0f);
    blob += "\ndog ";
    blob += float_bytes(-1.5f) + float_bytes(0.25f) + float_bytes(8.0f);
    testutil::write_file(dir.file("w.bin"), blob);

    const EmbeddingMatrix m = load_word2vec_binary(dir.file("w.bin"));
    CHECK(m.size() == 2);
    CHECK(m.dim == 3);
    CHECK((*lookup(m, "cat"))[0] == doctest::Approx(1.0f));
    CHECK((*lookup(m, "dog"))[1] == doctest::Approx(0.25f));
  }

  TEST_CASE("word2vec loader rejects truncated and malformed files") {
    testutil::TempDir dir("emb");
    std::string truncated = "1 3\ncat ";
    truncated += float_bytes(1.0f);  // two floats short
    testutil::write_file(dir.file("t.bin"), truncated);
    CHECK_THROWS_AS(load_word2vec_binary(dir.file("t.bin")), DataError);

    testutil::write_file(dir.file("h.bin"), "not a header\n");
    CHECK_THROWS_AS(load_word2vec_binary(dir.file("h.bin")), DataError);

    std::string longtok = "1 1\n" + std::string(3000, 'a');
    testutil::write_file(dir.file("l.bin"), longtok);
    CHECK_THROWS_AS(load_word2vec_binary(dir.file("l.bin")), DataError);
  }

  TEST_CASE("text write/load round-trip within 1e-6") {
    testutil::TempDir dir("emb");
    const EmbeddingMatrix original = testutil::random_embedding(50, 8, 123);
    write_text_embedding(original, dir.file("rt.txt"));
    const EmbeddingMatrix loaded = load_text_embedding(dir.file("rt.txt"));
    REQUIRE(loaded.size() == original.size());
    REQUIRE(loaded.dim == original.dim);
    for (std::size_t i = 0; i < original.size(); ++i) {
      CHECK(loaded.tokens[i] == original.tokens[i]);
      for (std::size_t j = 0; j < original.dim; ++j) {
        CHECK(std::abs(loaded.row(i)[j] - original.row(i)[j]) < 1e-6f);
      }
    }

    write_text_embedding(original, dir.file("rt2.txt"), true);
    const EmbeddingMatrix with_header = load_text_embedding(dir.file("rt2.txt"));
    CHECK(with_header.size() == original.size());
  }

  TEST_CASE("normalize_rows is idempotent and reports zero rows") {
    testutil::TempDir dir("emb");
    testutil::write_file(dir.file("n.txt"), "cat 3 4\nzero 0 0\n");
    const EmbeddingMatrix m = load_text_embedding(dir.file("n.txt"));
    NormalizeReport report;
    const EmbeddingMatrix n1 = normalize_rows(m, &report);
    CHECK(n1.row_normalized);
    CHECK((*lookup(n1, "cat"))[0] == doctest::Approx(0.6f));
    CHECK((*lookup(n1, "cat"))[1] == doctest::Approx(0.8f));
    REQUIRE(report.zero_rows.size() == 1);
    CHECK(report.zero_rows[0] == 1);

    const EmbeddingMatrix n2 = normalize_rows(n1);
    for (std::size_t j = 0; j < n1.dim; ++j) {
      CHECK(n2.row(0)[j] == doctest::Approx(n1.row(0)[j]).epsilon(1e-6));
    }
  }

  TEST_CASE("restrict_vocab keeps request order and reports misses") {
    const EmbeddingMatrix m = testutil::random_embedding(10, 4, 7);
    const std::vector<std::string> request{"w3", "w1", "nope", "w3"};
    const VocabRestriction r = restrict_vocab(m, request);
    REQUIRE(r.matrix.size() == 2);
    CHECK(r.matrix.tokens[0] == "w3");
    CHECK(r.matrix.tokens[1] == "w1");
    REQUIRE(r.missing.size() == 1);
    CHECK(r.missing[0] == "nope");
    CHECK(r.matrix.row(0)[0] == m.row(3)[0]);

    // Restricting to the full token list reproduces the matrix.
    const VocabRestriction full = restrict_vocab(m, m.tokens);
    CHECK(full.missing.empty());
    CHECK(full.matrix.size() == m.size());
  }
}
