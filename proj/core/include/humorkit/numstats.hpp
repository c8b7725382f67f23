#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace humorkit {

// Pearson correlation of two equal-length samples.  Throws NumericalError
// when either sample has zero variance or fewer than two points.
double pearson(std::span<const double> x, std::span<const double> y);

// A fitted linear map from embedding space to a scalar target.
struct LinearProbe {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double ridge = 0.0;
  std::size_t n_samples = 0;
  uint64_t seed = 0;

  double predict(const Eigen::VectorXd& x) const { return weights.dot(x) + intercept; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
    return ((X * weights).array() + intercept).matrix();
  }
};

// Least squares with optional ridge penalty on the weights (never on the
// intercept).  ridge == 0 returns the minimum-norm solution, so the fit is
// well-defined even when the design is rank-deficient.
LinearProbe fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double ridge = 0.0, bool intercept = true);

// Ridge default for probe fitting: a tiny stabilizer only when the sample
// count is small relative to the dimension.
double default_ridge(std::size_t n, std::size_t d);

// Shuffled contiguous split: every index appears exactly once and fold sizes
// differ by at most one.
std::vector<int> fold_assignments(std::size_t n, int folds, uint64_t seed);

// Out-of-fold predictions for every sample under a fresh per-fold fit.
Eigen::VectorXd cross_val_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                                  double ridge, uint64_t seed, bool intercept = true);

struct CvReport {
  std::vector<double> per_repetition_r;
  double mean_r = 0.0;
  double ci95_halfwidth = 0.0;
  int folds = 0;
  int repetitions = 0;
  uint64_t seed = 0;
  bool degenerate_ci = false;  // single repetition, no spread to estimate
};

// Repeated k-fold cross-validation; each repetition reshuffles the folds and
// scores out-of-fold predictions against the target by Pearson correlation.
CvReport repeated_cv_correlation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                                 int repetitions, double ridge, uint64_t seed,
                                 unsigned threads = 1, bool intercept = true);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

// Welch's unequal-variance two-sided t-test.
TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b);

// Bonferroni adjustment: multiply by the family size, cap at 1.
std::vector<double> bonferroni(std::span<const double> p_values);

enum class Tail { two_sided, upper, lower };
enum class GroupStatistic { mean };

struct PermutationTestResult {
  double observed = 0.0;
  std::size_t null_samples = 0;
  double p_value = 0.0;
  double null_q025 = 0.0;
  double null_q975 = 0.0;
  uint64_t seed = 0;
};

// Permutation test for one group's statistic against the pooled values.
// `group_sizes` partitions `values` into contiguous blocks; each shuffle
// permutes the pooled values and recomputes the target block's statistic.
// P-values use add-one smoothing; the two-sided p doubles the smaller tail.
PermutationTestResult permutation_group_test(std::span<const double> values,
                                             std::span<const std::size_t> group_sizes,
                                             GroupStatistic statistic, std::size_t target_group,
                                             std::size_t shuffles, uint64_t seed,
                                             Tail tail = Tail::two_sided, unsigned threads = 1);

// Linear-interpolation quantile of a sample (the "type 7" convention).
double quantile_type7(std::vector<double> sorted_values, double q);

}  // namespace humorkit
