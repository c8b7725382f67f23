#include "humorkit/numstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "humorkit/errors.hpp"
#include "humorkit/parallel.hpp"
#include "humorkit/rng.hpp"

namespace humorkit {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw NumericalError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw NumericalError("pearson: need at least two points");

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= double(n);
  mean_y /= double(n);

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericalError("pearson: zero-variance sample");
  return sxy / std::sqrt(sxx * syy);
}

double default_ridge(std::size_t n, std::size_t d) { return n < 2 * d ? 1e-6 : 0.0; }

LinearProbe fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge,
                              bool intercept) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n != y.size()) throw NumericalError("fit: X rows and y length differ");
  if (n < 1 || d < 1) throw NumericalError("fit: empty design");
  if (!X.allFinite() || !y.allFinite()) throw NumericalError("fit: non-finite input");
  if (ridge < 0.0) throw NumericalError("fit: negative ridge");

  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(d);
  double y_mean = 0.0;
  Eigen::MatrixXd Xc = X;
  Eigen::VectorXd yc = y;
  if (intercept) {
    x_mean = X.colwise().mean();
    y_mean = y.mean();
    Xc.rowwise() -= x_mean;
    yc.array() -= y_mean;
  }

  LinearProbe probe;
  probe.ridge = ridge;
  probe.n_samples = static_cast<std::size_t>(n);
  if (ridge == 0.0) {
    // Minimum-norm solution; stable under rank deficiency.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xc);
    probe.weights = cod.solve(yc);
  } else {
    // Augment the design with sqrt(ridge)*I; ordinary QR then solves the
    // ridge normal equations without forming X^T X.
    const double root = std::sqrt(ridge);
    Eigen::MatrixXd aug(n + d, d);
    aug.topRows(n) = Xc;
    aug.bottomRows(d) = root * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d);
    rhs.head(n) = yc;
    probe.weights = aug.householderQr().solve(rhs);
  }
  probe.intercept = intercept ? y_mean - x_mean.dot(probe.weights) : 0.0;
  if (!probe.weights.allFinite() || !std::isfinite(probe.intercept)) {
    throw NumericalError("fit: solution is non-finite");
  }
  return probe;
}

std::vector<int> fold_assignments(std::size_t n, int folds, uint64_t seed) {
  if (folds < 2) throw NumericalError("fold_assignments: need at least two folds");
  if (n < static_cast<std::size_t>(folds)) {
    throw NumericalError("fold_assignments: fewer samples than folds");
  }
  Rng rng = make_rng(seed);
  const std::vector<std::size_t> order = shuffled_indices(n, rng);

  std::vector<int> assignment(n, -1);
  const std::size_t base = n / static_cast<std::size_t>(folds);
  const std::size_t extra = n % static_cast<std::size_t>(folds);
  std::size_t cursor = 0;
  for (int f = 0; f < folds; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) assignment[order[cursor++]] = f;
  }
  return assignment;
}

Eigen::VectorXd cross_val_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                                  double ridge, uint64_t seed, bool intercept) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const std::vector<int> assignment = fold_assignments(n, folds, seed);

  Eigen::VectorXd predictions(X.rows());
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
  for (int f = 0; f < folds; ++f) {
    train_rows.clear();
    test_rows.clear();
    for (std::size_t i = 0; i < n; ++i) {
      (assignment[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd Xtrain(train_rows.size(), X.cols());
    Eigen::VectorXd ytrain(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Xtrain.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
      ytrain(static_cast<Eigen::Index>(i)) = y(train_rows[i]);
    }
    const LinearProbe probe = fit_least_squares(Xtrain, ytrain, ridge, intercept);
    for (const Eigen::Index row : test_rows) {
      predictions(row) = probe.weights.dot(X.row(row)) + probe.intercept;
    }
  }
  return predictions;
}

CvReport repeated_cv_correlation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                                 int repetitions, double ridge, uint64_t seed, unsigned threads,
                                 bool intercept) {
  if (repetitions < 1) throw NumericalError("cv: need at least one repetition");

  CvReport report;
  report.folds = folds;
  report.repetitions = repetitions;
  report.seed = seed;
  report.per_repetition_r.assign(static_cast<std::size_t>(repetitions), 0.0);

  parallel_for(static_cast<std::size_t>(repetitions), threads, [&](std::size_t rep) {
    const uint64_t rep_seed = derive_seed(seed, rep);
    const Eigen::VectorXd predictions = cross_val_predict(X, y, folds, ridge, rep_seed, intercept);
    report.per_repetition_r[rep] =
        pearson({predictions.data(), static_cast<std::size_t>(predictions.size())},
                {y.data(), static_cast<std::size_t>(y.size())});
  });

  double sum = 0.0;
  for (const double r : report.per_repetition_r) sum += r;
  report.mean_r = sum / double(repetitions);

  if (repetitions < 2) {
    report.ci95_halfwidth = 0.0;
    report.degenerate_ci = true;
  } else {
    double ss = 0.0;
    for (const double r : report.per_repetition_r) {
      const double d = r - report.mean_r;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / double(repetitions - 1));
    report.ci95_halfwidth = 1.96 * sd / std::sqrt(double(repetitions));
  }
  return report;
}

TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw NumericalError("t-test: need at least two points per sample");
  }
  const auto moments = [](std::span<const double> s) {
    double mean = 0.0;
    for (const double v : s) mean += v;
    mean /= double(s.size());
    double ss = 0.0;
    for (const double v : s) {
      const double d = v - mean;
      ss += d * d;
    }
    return std::pair<double, double>{mean, ss / double(s.size() - 1)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);

  const double ga = var_a / double(a.size());
  const double gb = var_b / double(b.size());
  if (ga + gb == 0.0) throw NumericalError("t-test: both samples have zero variance");

  TTestResult result;
  result.mean_a = mean_a;
  result.mean_b = mean_b;
  result.t = (mean_a - mean_b) / std::sqrt(ga + gb);
  result.df = (ga + gb) * (ga + gb) /
              (ga * ga / double(a.size() - 1) + gb * gb / double(b.size() - 1));
  const boost::math::students_t dist(result.df);
  result.p_value = 2.0 * boost::math::cdf(dist, -std::abs(result.t));
  return result;
}

std::vector<double> bonferroni(std::span<const double> p_values) {
  std::vector<double> out;
  out.reserve(p_values.size());
  const double m = double(p_values.size());
  for (const double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw NumericalError("bonferroni: p-value outside [0, 1]");
    out.push_back(std::min(1.0, p * m));
  }
  return out;
}

double quantile_type7(std::vector<double> sorted_values, double q) {
  if (sorted_values.empty()) throw NumericalError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw NumericalError("quantile: q outside [0, 1]");
  std::sort(sorted_values.begin(), sorted_values.end());
  const double h = q * double(sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = h - double(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

PermutationTestResult permutation_group_test(std::span<const double> values,
                                             std::span<const std::size_t> group_sizes,
                                             GroupStatistic statistic, std::size_t target_group,
                                             std::size_t shuffles, uint64_t seed, Tail tail,
                                             unsigned threads) {
  (void)statistic;  // only the mean is defined today
  if (target_group >= group_sizes.size()) {
    throw NumericalError("permutation test: target group out of range");
  }
  std::size_t total = 0;
  std::size_t target_offset = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    if (g == target_group) target_offset = total;
    total += group_sizes[g];
  }
  if (total != values.size()) {
    throw NumericalError("permutation test: group sizes do not partition the values");
  }
  const std::size_t target_size = group_sizes[target_group];
  if (target_size == 0) throw NumericalError("permutation test: empty target group");
  if (shuffles == 0) throw NumericalError("permutation test: need at least one shuffle");

  const auto block_mean = [&](const std::vector<double>& pool, std::size_t offset,
                              std::size_t size) {
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) sum += pool[offset + i];
    return sum / double(size);
  };

  std::vector<double> pool(values.begin(), values.end());
  PermutationTestResult result;
  result.seed = seed;
  result.null_samples = shuffles;
  result.observed = block_mean(pool, target_offset, target_size);

  std::vector<double> null_stats(shuffles, 0.0);
  parallel_for(shuffles, threads, [&](std::size_t s) {
    Rng rng = make_rng(derive_seed(seed, s));
    std::vector<double> shuffled(values.begin(), values.end());
    shuffle(shuffled, rng);
    null_stats[s] = block_mean(shuffled, target_offset, target_size);
  });

  std::size_t count_ge = 0;
  std::size_t count_le = 0;
  for (const double v : null_stats) {
    if (v >= result.observed) ++count_ge;
    if (v <= result.observed) ++count_le;
  }
  const double p_up = double(1 + count_ge) / double(1 + shuffles);
  const double p_low = double(1 + count_le) / double(1 + shuffles);
  switch (tail) {
    case Tail::upper: result.p_value = p_up; break;
    case Tail::lower: result.p_value = p_low; break;
    case Tail::two_sided: result.p_value = std::min(1.0, 2.0 * std::min(p_up, p_low)); break;
  }

  result.null_q025 = quantile_type7(null_stats, 0.025);
  result.null_q975 = quantile_type7(null_stats, 0.975);
  return result;
}

}  // namespace humorkit
