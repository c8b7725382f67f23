#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "humorkit/errors.hpp"
#include "humorkit/numstats.hpp"
#include "humorkit/rng.hpp"

using namespace humorkit;

namespace {

// Min-norm least squares through a full SVD pseudo-inverse; the independent
// oracle the production QR/COD path is checked against.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::VectorXd inv = sv;
  const double cutoff = sv.size() > 0 ? sv(0) * 1e-12 : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * y;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = standard_normal(rng);
  }
  return X;
}

}  // namespace

TEST_SUITE("numstats") {
  TEST_CASE("pearson matches a hand-computed value") {
    // x=(1,2,4), y=(2,1,5): covariance terms give 16/sqrt(364).
    const std::vector<double> x{1, 2, 4};
    const std::vector<double> y{2, 1, 5};
    CHECK(pearson(x, y) == doctest::Approx(0.83862786937753464).epsilon(1e-14));
  }

  TEST_CASE("pearson is invariant to positive affine maps within 1e-12") {
    Rng rng = make_rng(99);
    std::vector<double> x(50);
    std::vector<double> y(50);
    for (auto& v : x) v = standard_normal(rng);
    for (auto& v : y) v = standard_normal(rng);
    const double base = pearson(x, y);
    std::vector<double> x2(50);
    std::vector<double> y2(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x2[i] = 3.7 * x[i] - 11.0;
      y2[i] = 0.002 * y[i] + 5.0;
    }
    CHECK(std::abs(pearson(x2, y2) - base) < 1e-12);
    // A negative slope flips the sign exactly.
    for (auto& v : x2) v = -v;
    CHECK(std::abs(pearson(x2, y2) + base) < 1e-12);
  }

  TEST_CASE("pearson rejects degenerate input") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> flat{2, 2, 2};
    const std::vector<double> shorter{1, 2};
    const std::vector<double> one{1};
    CHECK_THROWS_AS(pearson(x, flat), NumericalError);
    CHECK_THROWS_AS(pearson(x, shorter), NumericalError);
    CHECK_THROWS_AS(pearson(one, one), NumericalError);
  }

  TEST_CASE("least squares recovers an exact linear relation") {
    const Eigen::MatrixXd X = random_matrix(40, 3, 5);
    Eigen::VectorXd w(3);
    w << 2.0, -1.0, 0.5;
    const Eigen::VectorXd y = (X * w).array() + 4.0;
    const LinearProbe probe = fit_least_squares(X, y);
    CHECK((probe.weights - w).norm() < 1e-10);
    CHECK(probe.intercept == doctest::Approx(4.0).epsilon(1e-10));
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(3);
    CHECK(probe.predict(origin) == doctest::Approx(4.0).epsilon(1e-10));
  }

  TEST_CASE("ridge-free fit matches the pseudo-inverse oracle at 1e-8 relative") {
    // Overdetermined, underdetermined, and rank-deficient designs.
    for (const auto [n, d] : {std::pair<int, int>{60, 8}, {8, 20}, {30, 10}}) {
      Eigen::MatrixXd X = random_matrix(n, d, uint64_t(n * 100 + d));
      if (n == 30) X.col(9) = X.col(0) + X.col(1);  // planted rank deficiency
      Eigen::VectorXd y = random_matrix(n, 1, uint64_t(n * 7 + d));

      // Compare on the centered problem, which is what the fit solves.
      const Eigen::RowVectorXd x_mean = X.colwise().mean();
      Eigen::MatrixXd Xc = X;
      Xc.rowwise() -= x_mean;
      Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
      const Eigen::VectorXd oracle = pinv_solve(Xc, yc);

      const LinearProbe probe = fit_least_squares(X, y, 0.0);
      CHECK((probe.weights - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
      CHECK(probe.intercept ==
            doctest::Approx(y.mean() - x_mean.dot(oracle)).epsilon(1e-8));
    }
  }

  TEST_CASE("ridge shrinks the solution monotonically") {
    const Eigen::MatrixXd X = random_matrix(30, 6, 17);
    const Eigen::VectorXd y = random_matrix(30, 1, 18);
    double previous = fit_least_squares(X, y, 0.0).weights.norm();
    for (const double ridge : {0.1, 1.0, 10.0, 100.0}) {
      const double current = fit_least_squares(X, y, ridge).weights.norm();
      CHECK(current < previous);
      previous = current;
    }
  }

  TEST_CASE("ridge solution satisfies the regularized normal equations") {
    const Eigen::MatrixXd X = random_matrix(25, 5, 23);
    const Eigen::VectorXd y = random_matrix(25, 1, 24);
    const double ridge = 2.5;
    const LinearProbe probe = fit_least_squares(X, y, ridge);
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    Eigen::MatrixXd Xc = X;
    Xc.rowwise() -= x_mean;
    Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
    const Eigen::VectorXd residual =
        Xc.transpose() * (Xc * probe.weights - yc) + ridge * probe.weights;
    CHECK(residual.norm() < 1e-9 * std::max(1.0, yc.norm()));
  }

  TEST_CASE("fit rejects bad input") {
    const Eigen::MatrixXd X = random_matrix(10, 3, 1);
    const Eigen::VectorXd y = random_matrix(9, 1, 2);
    CHECK_THROWS_AS(fit_least_squares(X, y), NumericalError);
    Eigen::VectorXd bad = random_matrix(10, 1, 3);
    bad(4) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit_least_squares(X, bad), NumericalError);
    CHECK_THROWS_AS(fit_least_squares(X, random_matrix(10, 1, 4), -1.0), NumericalError);
  }

  TEST_CASE("default ridge kicks in only for small samples") {
    CHECK(default_ridge(100, 300) == doctest::Approx(1e-6));
    CHECK(default_ridge(599, 300) == doctest::Approx(1e-6));
    CHECK(default_ridge(600, 300) == 0.0);
    CHECK(default_ridge(5000, 300) == 0.0);
  }

  TEST_CASE("fold assignments partition completely with balanced sizes") {
    for (const std::size_t n : {23u, 100u, 10u}) {
      const auto folds = fold_assignments(n, 10, 77);
      REQUIRE(folds.size() == n);
      std::vector<std::size_t> sizes(10, 0);
      for (const int f : folds) {
        REQUIRE(f >= 0);
        REQUIRE(f < 10);
        ++sizes[static_cast<std::size_t>(f)];
      }
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= 1);
    }
    CHECK_THROWS_AS(fold_assignments(5, 10, 1), NumericalError);
    CHECK_THROWS_AS(fold_assignments(10, 1, 1), NumericalError);
  }

  TEST_CASE("fold assignments differ across seeds but not within one") {
    const auto a = fold_assignments(50, 5, 1);
    const auto b = fold_assignments(50, 5, 1);
    const auto c = fold_assignments(50, 5, 2);
    CHECK(a == b);
    CHECK(a != c);
  }

  TEST_CASE("cross_val_predict covers every sample with out-of-fold fits") {
    // With a perfectly linear target every out-of-fold prediction is exact.
    const Eigen::MatrixXd X = random_matrix(50, 4, 31);
    Eigen::VectorXd w(4);
    w << 1.0, 2.0, 3.0, 4.0;
    const Eigen::VectorXd y = (X * w).array() - 2.0;
    const Eigen::VectorXd predictions = cross_val_predict(X, y, 5, 0.0, 7);
    CHECK((predictions - y).norm() < 1e-8);
  }

  TEST_CASE("repeated CV on a planted direction approaches the analytic ceiling") {
    // y = <x, w> + noise with x ~ N(0, I_5), noise sd 0.5 and |w| = 1:
    // corr(y, <x,w>) = 1/sqrt(1.25) ~= 0.894.
    Rng rng = make_rng(2024);
    const int n = 2000;
    const int d = 5;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd w(d);
    w << 0.5, -0.5, 0.5, -0.3, std::sqrt(1.0 - 0.84);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = standard_normal(rng);
      y(i) = X.row(i).dot(w) + 0.5 * standard_normal(rng);
    }
    const CvReport report = repeated_cv_correlation(X, y, 10, 5, 0.0, 11, 2);
    CHECK(report.mean_r == doctest::Approx(1.0 / std::sqrt(1.25)).epsilon(0.03));
    CHECK(report.per_repetition_r.size() == 5);
    CHECK_FALSE(report.degenerate_ci);
    CHECK(report.ci95_halfwidth > 0.0);
    CHECK(report.ci95_halfwidth < 0.02);
  }

  TEST_CASE("repeated CV is reproducible and thread-count independent") {
    const Eigen::MatrixXd X = random_matrix(60, 4, 41);
    Eigen::VectorXd y = X.col(0) + 0.5 * random_matrix(60, 1, 42);
    const CvReport one = repeated_cv_correlation(X, y, 5, 8, 0.0, 3, 1);
    const CvReport four = repeated_cv_correlation(X, y, 5, 8, 0.0, 3, 4);
    CHECK(one.per_repetition_r == four.per_repetition_r);
    CHECK(one.mean_r == four.mean_r);
    CHECK(one.ci95_halfwidth == four.ci95_halfwidth);
  }

  TEST_CASE("single-repetition CV flags a degenerate interval") {
    const Eigen::MatrixXd X = random_matrix(30, 3, 51);
    Eigen::VectorXd y = X.col(0) + 0.1 * random_matrix(30, 1, 52);
    const CvReport report = repeated_cv_correlation(X, y, 5, 1, 0.0, 5);
    CHECK(report.degenerate_ci);
    CHECK(report.ci95_halfwidth == 0.0);
  }

  TEST_CASE("Welch t-test matches a frozen reference") {
    // Reference p computed with an independent Students-t implementation.
    const std::vector<double> a{27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1,
                                21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4};
    const std::vector<double> b{27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2,
                                21.9, 22.1, 22.9, 30.5, 24.3, 23.8, 24.0, 21.8, 21.5, 22.5};
    const TTestResult r = two_sample_t_test(a, b);
    CHECK(r.t == doctest::Approx(-2.898659664431).epsilon(1e-10));
    CHECK(r.p_value == doctest::Approx(0.007336802710).epsilon(1e-8));
    CHECK(r.mean_a < r.mean_b);
  }

  TEST_CASE("t-test rejects degenerate samples") {
    const std::vector<double> flat1{2, 2, 2};
    const std::vector<double> flat2{3, 3};
    const std::vector<double> single{1};
    CHECK_THROWS_AS(two_sample_t_test(flat1, flat2), NumericalError);
    CHECK_THROWS_AS(two_sample_t_test(single, flat1), NumericalError);
  }

  TEST_CASE("bonferroni multiplies and caps") {
    const std::vector<double> p{0.01, 0.2, 1.0};
    const auto adjusted = bonferroni(p);
    CHECK(adjusted[0] == doctest::Approx(0.03));
    CHECK(adjusted[1] == doctest::Approx(0.6));
    CHECK(adjusted[2] == 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(adjusted[i] >= p[i]);
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(bonferroni(bad), NumericalError);
  }

  TEST_CASE("type-7 quantiles interpolate linearly") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 4.0);
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.75));
  }

  TEST_CASE("permutation test p-values use add-one smoothing") {
    // Target block mean is the maximum achievable, so every permutation
    // statistic is <= observed and the upper-tail p is its minimum value.
    const std::vector<double> values{10.0, 10.0, 0.0, 0.0, 0.0, 0.0};
    const std::vector<std::size_t> sizes{2, 4};
    const std::size_t shuffles = 99;
    const auto result = permutation_group_test(values, sizes, GroupStatistic::mean, 0, shuffles,
                                               123, Tail::upper);
    CHECK(result.observed == doctest::Approx(10.0));
    // Only the permutations placing both tens in the target block tie the
    // observed value; all others fall below, so p = (1 + ties)/(1 + S).
    std::size_t ties = 0;
    for (std::size_t s = 0; s < shuffles; ++s) {
      Rng rng = make_rng(derive_seed(123, s));
      std::vector<double> pool = values;
      shuffle(pool, rng);
      if (pool[0] + pool[1] == 20.0) ++ties;
    }
    CHECK(result.p_value == doctest::Approx(double(1 + ties) / double(1 + shuffles)));
  }

  TEST_CASE("two-sided permutation p doubles the smaller tail and caps at 1") {
    Rng rng = make_rng(7);
    std::vector<double> values(40);
    for (auto& v : values) v = standard_normal(rng);
    const std::vector<std::size_t> sizes{15, 25};
    const auto up = permutation_group_test(values, sizes, GroupStatistic::mean, 0, 199, 5,
                                           Tail::upper);
    const auto low = permutation_group_test(values, sizes, GroupStatistic::mean, 0, 199, 5,
                                            Tail::lower);
    const auto two = permutation_group_test(values, sizes, GroupStatistic::mean, 0, 199, 5,
                                            Tail::two_sided);
    CHECK(two.p_value == doctest::Approx(std::min(1.0, 2.0 * std::min(up.p_value, low.p_value))));
    CHECK(two.p_value <= 1.0);
    CHECK(two.null_q025 <= two.null_q975);
  }

  TEST_CASE("permutation test is thread-count independent") {
    Rng rng = make_rng(8);
    std::vector<double> values(30);
    for (auto& v : values) v = standard_normal(rng);
    const std::vector<std::size_t> sizes{10, 20};
    const auto one = permutation_group_test(values, sizes, GroupStatistic::mean, 0, 299, 9,
                                            Tail::two_sided, 1);
    const auto four = permutation_group_test(values, sizes, GroupStatistic::mean, 0, 299, 9,
                                             Tail::two_sided, 4);
    CHECK(one.p_value == four.p_value);
    CHECK(one.null_q025 == four.null_q025);
    CHECK(one.null_q975 == four.null_q975);
  }

  TEST_CASE("permutation p-values are calibrated under the null") {
    // 500 independent null datasets; upper-tail p-values should be close to
    // uniform. The Kolmogorov-Smirnov distance must stay under 0.05.
    const std::size_t trials = 500;
    const std::size_t shuffles = 199;
    std::vector<double> p_values;
    p_values.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng = make_rng(derive_seed(4250, t));
      std::vector<double> values(40);
      for (auto& v : values) v = standard_normal(rng);
      const std::vector<std::size_t> sizes{12, 28};
      const auto result = permutation_group_test(values, sizes, GroupStatistic::mean, 0,
                                                 shuffles, derive_seed(999, t), Tail::upper);
      p_values.push_back(result.p_value);
    }
    std::sort(p_values.begin(), p_values.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < p_values.size(); ++i) {
      const double empirical_hi = double(i + 1) / double(trials);
      const double empirical_lo = double(i) / double(trials);
      ks = std::max(ks, std::abs(empirical_hi - p_values[i]));
      ks = std::max(ks, std::abs(p_values[i] - empirical_lo));
    }
    CHECK(ks < 0.05);
  }

  TEST_CASE("permutation test input validation") {
    const std::vector<double> values{1, 2, 3};
    const std::vector<std::size_t> bad_sizes{2, 2};
    CHECK_THROWS_AS(permutation_group_test(values, bad_sizes, GroupStatistic::mean, 0, 10, 1),
                    NumericalError);
    const std::vector<std::size_t> sizes{1, 2};
    CHECK_THROWS_AS(permutation_group_test(values, sizes, GroupStatistic::mean, 5, 10, 1),
                    NumericalError);
    CHECK_THROWS_AS(permutation_group_test(values, sizes, GroupStatistic::mean, 0, 0, 1),
                    NumericalError);
  }
}
