#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace humorkit {

/// A vocabulary plus its |V| x dim vector table, row-major float32.
/// Immutable after load; safe to share across threads.
struct EmbeddingMatrix {
  std::vector<std::string> tokens;
  std::vector<float> values;  // row-major, tokens.size() * dim entries
  std::unordered_map<std::string, std::size_t> index;
  std::size_t dim = 0;
  bool row_normalized = false;

  std::size_t size() const { return tokens.size(); }

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }

  /// Rebuilds the token index and verifies the shape invariants.
  void finalize();
};

struct EmbeddingLoadReport {
  std::size_t duplicate_tokens = 0;  // dropped, first occurrence kept
};

/// Text format: UTF-8, one `token float...float` line per word, space
/// separated, with an optional leading `count dim` header (auto-detected as
/// a line of exactly two integer fields).
EmbeddingMatrix load_text_embedding(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_dim = std::nullopt,
                                    EmbeddingLoadReport* report = nullptr);

/// Binary format: ASCII header `vocab_size dim\n`, then per word the token
/// bytes terminated by a space followed by dim little-endian IEEE-754
/// float32 values; a trailing newline after the vector is tolerated.
EmbeddingMatrix load_word2vec_binary(const std::filesystem::path& path,
                                     std::size_t max_token_bytes = 1000,
                                     EmbeddingLoadReport* report = nullptr);

/// Writes the text format (values via shortest round-trip formatting, so a
/// reload reproduces them bit-for-bit).
void write_text_embedding(const EmbeddingMatrix& m, const std::filesystem::path& path,
                          bool with_header = false);

struct NormalizeReport {
  std::vector<std::size_t> zero_rows;
};

/// Each nonzero row scaled to unit L2 norm; zero rows are kept as-is and
/// reported. Idempotent.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m, NormalizeReport* report = nullptr);

/// Case-sensitive exact lookup.
std::optional<std::span<const float>> lookup(const EmbeddingMatrix& m, std::string_view token);

struct VocabRestriction {
  EmbeddingMatrix matrix;  // rows ordered as the requested token list
  std::vector<std::string> missing;
};

VocabRestriction restrict_vocab(const EmbeddingMatrix& m, std::span<const std::string> tokens);

}  // namespace humorkit
