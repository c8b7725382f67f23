#include "humorkit/features.hpp"

#include <algorithm>

#include "humorkit/errors.hpp"
#include "humorkit/rng.hpp"

namespace humorkit {
namespace {

Eigen::MatrixXd vocab_matrix(const EmbeddingMatrix& emb, const std::vector<std::string>& words) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(words.size()), static_cast<Eigen::Index>(emb.dim));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto row = lookup(emb, words[i]);
    for (std::size_t j = 0; j < emb.dim; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*row)[j];
    }
  }
  return X;
}

}  // namespace

std::array<CvReport, kFeatureCount> feature_predictability(const FeatureAnnotations& annotations,
                                                           const EmbeddingMatrix& emb, int folds,
                                                           int repetitions, uint64_t seed,
                                                           unsigned threads,
                                                           std::vector<std::string>* missing) {
  std::vector<std::string> covered;
  for (const auto& word : annotations.words) {
    if (lookup(emb, word)) {
      covered.push_back(word);
    } else if (missing) {
      missing->push_back(word);
    }
  }
  if (covered.size() < static_cast<std::size_t>(folds)) {
    throw DataError("feature predictability: fewer covered words than folds");
  }

  const Eigen::MatrixXd X = vocab_matrix(emb, covered);
  const double ridge = default_ridge(covered.size(), emb.dim);

  std::array<CvReport, kFeatureCount> reports;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(covered.size()));
    for (std::size_t i = 0; i < covered.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = annotations.scores.at(covered[i])[f];
    }
    reports[f] = repeated_cv_correlation(X, y, folds, repetitions, ridge, derive_seed(seed, f),
                                         threads);
  }
  return reports;
}

std::map<std::string, double> humor_target_with_floor(
    const std::map<std::string, double>& rated_means, const WordList& all_words) {
  std::map<std::string, double> out;
  for (const auto& word : all_words.words) {
    const auto it = rated_means.find(word);
    out.emplace(word, it == rated_means.end() ? -1.0 : it->second);
  }
  return out;
}

std::array<double, kFeatureCount> feature_humor_correlation(
    const FeatureAnnotations& annotations, const std::map<std::string, double>& humor_target) {
  std::vector<double> targets;
  targets.reserve(annotations.words.size());
  for (const auto& word : annotations.words) {
    const auto it = humor_target.find(word);
    if (it == humor_target.end()) {
      throw DataError("feature correlation: annotated word '" + word +
                      "' missing from the humor target");
    }
    targets.push_back(it->second);
  }

  std::array<double, kFeatureCount> out{};
  std::vector<double> scores(annotations.words.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    for (std::size_t i = 0; i < annotations.words.size(); ++i) {
      scores[i] = annotations.scores.at(annotations.words[i])[f];
    }
    out[f] = pearson(scores, targets);
  }
  return out;
}

std::size_t word_length(std::string_view word, bool count_underscores) {
  if (count_underscores) return word.size();
  std::size_t n = 0;
  for (const char c : word) {
    if (c != '_') ++n;
  }
  return n;
}

WordLengthBaseline word_length_baseline(const std::vector<std::string>& words,
                                        const EmbeddingMatrix& emb,
                                        const std::map<std::string, double>& humor_target,
                                        int folds, int repetitions, uint64_t seed,
                                        unsigned threads, bool count_underscores) {
  WordLengthBaseline out;

  // Correlation with the humor target runs over the whole word set.
  std::vector<double> lengths;
  std::vector<double> targets;
  lengths.reserve(words.size());
  targets.reserve(words.size());
  for (const auto& word : words) {
    const auto it = humor_target.find(word);
    if (it == humor_target.end()) {
      throw DataError("length baseline: word '" + word + "' missing from the humor target");
    }
    lengths.push_back(double(word_length(word, count_underscores)));
    targets.push_back(it->second);
  }
  out.humor_r = pearson(lengths, targets);

  // Predictability from the embedding is limited to covered words.
  std::vector<std::string> covered;
  for (const auto& word : words) {
    if (lookup(emb, word)) covered.push_back(word);
  }
  out.words_in_vocab = covered.size();
  if (covered.size() < static_cast<std::size_t>(folds)) {
    throw DataError("length baseline: fewer covered words than folds");
  }
  const Eigen::MatrixXd X = vocab_matrix(emb, covered);
  Eigen::VectorXd y(static_cast<Eigen::Index>(covered.size()));
  for (std::size_t i = 0; i < covered.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = double(word_length(covered[i], count_underscores));
  }
  const double ridge = default_ridge(covered.size(), emb.dim);
  out.predictability = repeated_cv_correlation(X, y, folds, repetitions, ridge,
                                               derive_seed(seed, kFeatureCount), threads);
  return out;
}

FeatureReport build_feature_report(const FeatureAnnotations& annotations,
                                   const EmbeddingMatrix& emb,
                                   const std::map<std::string, double>& humor_target, int folds,
                                   int repetitions, uint64_t seed, unsigned threads,
                                   const std::string& embedding_name, bool count_underscores) {
  FeatureReport report;
  report.embedding_name = embedding_name;
  report.folds = folds;
  report.repetitions = repetitions;
  report.seed = seed;

  const auto predictability = feature_predictability(annotations, emb, folds, repetitions, seed,
                                                     threads, &report.missing_words);
  const auto humor_r = feature_humor_correlation(annotations, humor_target);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    FeatureReport::Row row;
    row.name = std::string(kFeatureNames[f]);
    row.predictability = predictability[f].mean_r;
    row.ci95_halfwidth = predictability[f].ci95_halfwidth;
    row.humor_r = humor_r[f];
    report.rows.push_back(std::move(row));
  }

  const WordLengthBaseline baseline = word_length_baseline(
      annotations.words, emb, humor_target, folds, repetitions, seed, threads, count_underscores);
  FeatureReport::Row row;
  row.name = "word_length";
  row.predictability = baseline.predictability.mean_r;
  row.ci95_halfwidth = baseline.predictability.ci95_halfwidth;
  row.humor_r = baseline.humor_r;
  report.rows.push_back(std::move(row));
  return report;
}

}  // namespace humorkit
