#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "humorkit/datasets.hpp"
#include "humorkit/embedding.hpp"
#include "humorkit/numstats.hpp"

namespace humorkit {

// How predictable each feature's annotation score is from the embedding
// alone, via repeated cross-validated regression.
std::array<CvReport, kFeatureCount> feature_predictability(
    const FeatureAnnotations& annotations, const EmbeddingMatrix& emb, int folds, int repetitions,
    uint64_t seed, unsigned threads = 1, std::vector<std::string>* missing = nullptr);

// Extend per-word mean ratings (0..3 scale) to a full word list: rated words
// keep their mean, everything else drops to a floor of -1.
std::map<std::string, double> humor_target_with_floor(
    const std::map<std::string, double>& rated_means, const WordList& all_words);

// Pearson correlation of each feature's score with the humor target over the
// annotated words.  Every annotated word must appear in the target map.
std::array<double, kFeatureCount> feature_humor_correlation(
    const FeatureAnnotations& annotations, const std::map<std::string, double>& humor_target);

// Character count, underscores included by default ("hoo_hah" -> 7).
std::size_t word_length(std::string_view word, bool count_underscores = true);

struct WordLengthBaseline {
  CvReport predictability;  // length predicted from the embedding
  double humor_r = 0.0;     // corr(length, humor target) over the word set
  std::size_t words_in_vocab = 0;
};

WordLengthBaseline word_length_baseline(const std::vector<std::string>& words,
                                        const EmbeddingMatrix& emb,
                                        const std::map<std::string, double>& humor_target,
                                        int folds, int repetitions, uint64_t seed,
                                        unsigned threads = 1, bool count_underscores = true);

// One row per feature plus the word-length baseline; the plot-ready
// (predictability, humor correlation) pairing.
struct FeatureReport {
  struct Row {
    std::string name;
    double predictability = 0.0;
    double ci95_halfwidth = 0.0;
    double humor_r = 0.0;
  };

  std::vector<Row> rows;
  std::string embedding_name;
  int folds = 0;
  int repetitions = 0;
  uint64_t seed = 0;
  std::vector<std::string> missing_words;
};

FeatureReport build_feature_report(const FeatureAnnotations& annotations,
                                   const EmbeddingMatrix& emb,
                                   const std::map<std::string, double>& humor_target, int folds,
                                   int repetitions, uint64_t seed, unsigned threads = 1,
                                   const std::string& embedding_name = "",
                                   bool count_underscores = true);

}  // namespace humorkit
