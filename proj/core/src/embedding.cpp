#include "humorkit/embedding.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "humorkit/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "word2vec binary loader assumes a little-endian host");

namespace humorkit {
namespace {

bool is_integer_field(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

float parse_float_strict(std::string_view field, const std::string& context) {
  float value = 0.0f;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(context + ": cannot parse float '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

void EmbeddingMatrix::finalize() {
  index.clear();
  index.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = index.emplace(tokens[i], i);
    if (!inserted) throw DataError("duplicate token in finalized matrix: " + tokens[i]);
  }
  if (values.size() != tokens.size() * dim) {
    throw DataError("embedding matrix shape mismatch");
  }
}

EmbeddingMatrix load_text_embedding(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_dim,
                                    EmbeddingLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path.string());

  EmbeddingMatrix m;
  EmbeddingLoadReport local_report;
  std::string line;
  std::size_t line_number = 0;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::string context = path.string() + ":" + std::to_string(line_number);

    // Tokenize on single spaces; the formats in the wild never emit runs.
    std::vector<std::string_view> fields;
    std::string_view view(line);
    std::size_t start = 0;
    while (start <= view.size()) {
      const std::size_t sp = view.find(' ', start);
      if (sp == std::string_view::npos) {
        fields.push_back(view.substr(start));
        break;
      }
      fields.push_back(view.substr(start, sp - start));
      start = sp + 1;
    }
    if (!fields.empty() && fields.back().empty()) fields.pop_back();  // trailing space

    if (first_content_line) {
      first_content_line = false;
      if (fields.size() == 2 && is_integer_field(fields[0]) && is_integer_field(fields[1])) {
        // `count dim` header; the count is advisory, dim is checked per line.
        continue;
      }
    }

    if (fields.size() < 2) {
      throw DataError(context + ": expected `token float...`, got '" + line + "'");
    }
    const std::size_t line_dim = fields.size() - 1;
    if (m.dim == 0) {
      m.dim = line_dim;
      if (expected_dim && *expected_dim != m.dim) {
        throw DataError(context + ": dimension " + std::to_string(m.dim) +
                        " does not match expected " + std::to_string(*expected_dim));
      }
    } else if (line_dim != m.dim) {
      throw DataError(context + ": dimension " + std::to_string(line_dim) +
                      " differs from earlier lines (" + std::to_string(m.dim) + ")");
    }

    std::string token(fields[0]);
    if (m.index.contains(token)) {
      ++local_report.duplicate_tokens;
      continue;
    }
    m.index.emplace(token, m.tokens.size());
    m.tokens.push_back(std::move(token));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      m.values.push_back(parse_float_strict(fields[i], context));
    }
  }

  if (m.tokens.empty()) throw DataError("empty embedding file: " + path.string());
  if (report) *report = local_report;
  return m;
}

EmbeddingMatrix load_word2vec_binary(const std::filesystem::path& path,
                                     std::size_t max_token_bytes,
                                     EmbeddingLoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw DataError(path.string() + ": missing header");
  const auto sp = header.find(' ');
  if (sp == std::string::npos || !is_integer_field(std::string_view(header).substr(0, sp)) ||
      !is_integer_field(std::string_view(header).substr(sp + 1))) {
    throw DataError(path.string() + ": header is not `vocab_size dim`");
  }
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::from_chars(header.data(), header.data() + sp, vocab_size);
  std::from_chars(header.data() + sp + 1, header.data() + header.size(), dim);
  if (dim == 0) throw DataError(path.string() + ": zero dimension in header");

  EmbeddingMatrix m;
  EmbeddingLoadReport local_report;
  m.dim = dim;
  m.tokens.reserve(vocab_size);
  m.values.reserve(vocab_size * dim);

  std::vector<float> vec(dim);
  for (std::size_t w = 0; w < vocab_size; ++w) {
    std::string token;
    char c = 0;
    // Leading newlines between records are padding some writers emit.
    while (in.get(c) && c == '\n') {
    }
    if (!in) throw DataError(path.string() + ": truncated before token " + std::to_string(w));
    while (c != ' ') {
      token.push_back(c);
      if (token.size() > max_token_bytes) {
        throw DataError(path.string() + ": token longer than " +
                        std::to_string(max_token_bytes) + " bytes");
      }
      if (!in.get(c)) {
        throw DataError(path.string() + ": truncated inside token " + std::to_string(w));
      }
    }
    in.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(dim * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != dim * sizeof(float)) {
      throw DataError(path.string() + ": truncated inside vector of '" + token + "'");
    }
    if (m.index.contains(token)) {
      ++local_report.duplicate_tokens;
      continue;
    }
    m.index.emplace(token, m.tokens.size());
    m.tokens.push_back(std::move(token));
    m.values.insert(m.values.end(), vec.begin(), vec.end());
  }

  if (report) *report = local_report;
  return m;
}

void write_text_embedding(const EmbeddingMatrix& m, const std::filesystem::path& path,
                          bool with_header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  if (with_header) out << m.size() << ' ' << m.dim << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.tokens[i];
    const auto row = m.row(i);
    for (float v : row) {
      auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
      out << ' ';
      out.write(buffer, ptr - buffer);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m, NormalizeReport* report) {
  EmbeddingMatrix out = m;
  NormalizeReport local;
  for (std::size_t i = 0; i < out.size(); ++i) {
    float* row = out.values.data() + i * out.dim;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < out.dim; ++j) sum_sq += double(row[j]) * double(row[j]);
    if (sum_sq == 0.0) {
      local.zero_rows.push_back(i);
      continue;
    }
    const double inv = 1.0 / std::sqrt(sum_sq);
    for (std::size_t j = 0; j < out.dim; ++j) {
      row[j] = static_cast<float>(double(row[j]) * inv);
    }
  }
  out.row_normalized = true;
  if (report) *report = std::move(local);
  return out;
}

std::optional<std::span<const float>> lookup(const EmbeddingMatrix& m, std::string_view token) {
  const auto it = m.index.find(std::string(token));
  if (it == m.index.end()) return std::nullopt;
  return m.row(it->second);
}

VocabRestriction restrict_vocab(const EmbeddingMatrix& m, std::span<const std::string> tokens) {
  VocabRestriction out;
  out.matrix.dim = m.dim;
  out.matrix.row_normalized = m.row_normalized;
  for (const auto& token : tokens) {
    const auto it = m.index.find(token);
    if (it == m.index.end()) {
      out.missing.push_back(token);
      continue;
    }
    if (out.matrix.index.contains(token)) continue;  // requested twice
    const auto row = m.row(it->second);
    out.matrix.index.emplace(token, out.matrix.tokens.size());
    out.matrix.tokens.push_back(token);
    out.matrix.values.insert(out.matrix.values.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace humorkit
