#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "humorkit/rng.hpp"

using namespace humorkit;

TEST_SUITE("rng") {
  TEST_CASE("splitmix64 matches the reference sequence") {
    // splitmix64(x) increments by the golden-ratio constant internally, so
    // feeding it the generator's successive pre-increment states reproduces
    // the reference stream for seed 0.
    constexpr uint64_t golden = 0x9e3779b97f4a7c15ull;
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
    CHECK(splitmix64(golden) == 0x6e789e6aa1b965f4ull);
    CHECK(splitmix64(golden * 2) == 0x06c45d188009454full);
  }

  TEST_CASE("derive_seed is deterministic and task-sensitive") {
    const uint64_t a = derive_seed(42, 0);
    CHECK(a == derive_seed(42, 0));
    CHECK(a != derive_seed(42, 1));
    CHECK(a != derive_seed(43, 0));
  }

  TEST_CASE("uniform_below stays in range and covers all values") {
    Rng rng = make_rng(7);
    std::set<uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
      const uint64_t v = uniform_below(rng, 6);
      REQUIRE(v < 6);
      seen.insert(v);
    }
    CHECK(seen.size() == 6);
  }

  TEST_CASE("shuffle produces a permutation") {
    Rng rng = make_rng(11);
    std::vector<int> values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto shuffled = values;
    shuffle(shuffled, rng);
    auto sorted = shuffled;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == values);
  }

  TEST_CASE("shuffled_indices covers 0..n-1 exactly once") {
    Rng rng = make_rng(13);
    const auto order = shuffled_indices(100, rng);
    std::set<std::size_t> seen(order.begin(), order.end());
    CHECK(order.size() == 100);
    CHECK(seen.size() == 100);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 99);
  }

  TEST_CASE("standard_normal has roughly standard moments") {
    Rng rng = make_rng(17);
    const int n = 20000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = standard_normal(rng);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
  }

  TEST_CASE("uniform_real stays in the half-open unit interval") {
    Rng rng = make_rng(19);
    for (int i = 0; i < 1000; ++i) {
      const double v = uniform_real(rng);
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
  }
}
