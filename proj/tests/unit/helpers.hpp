#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "humorkit/embedding.hpp"
#include "humorkit/rng.hpp"

namespace testutil {

// Scratch directory wiped on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag = "humorkit-test") {
    auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0;; ++attempt) {
      auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                               std::to_string(attempt));
      if (std::filesystem::create_directories(candidate)) {
        path = candidate;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// A reproducible random embedding over generated tokens.
inline humorkit::EmbeddingMatrix random_embedding(std::size_t count, std::size_t dim,
                                                  uint64_t seed,
                                                  const std::string& prefix = "w") {
  humorkit::EmbeddingMatrix m;
  m.dim = dim;
  humorkit::Rng rng = humorkit::make_rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    m.tokens.push_back(prefix + std::to_string(i));
    for (std::size_t j = 0; j < dim; ++j) {
      m.values.push_back(static_cast<float>(humorkit::standard_normal(rng)));
    }
  }
  m.finalize();
  return m;
}

}  // namespace testutil
