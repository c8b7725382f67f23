// Microbenchmarks for the hot paths: probe fitting, cross-validation,
// clustering, permutation shuffles, audience-match throughput, and the
// forced-choice simulator.

#include <cstdint>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "humorkit/clustering.hpp"
#include "humorkit/datasets.hpp"
#include "humorkit/embedding.hpp"
#include "humorkit/numstats.hpp"
#include "humorkit/personalize.hpp"
#include "humorkit/protocol_sim.hpp"
#include "humorkit/rng.hpp"

namespace {

using namespace humorkit;

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = standard_normal(rng);
  }
  return X;
}

Eigen::VectorXd random_vector(Eigen::Index n, uint64_t seed) {
  Rng rng = make_rng(seed);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = standard_normal(rng);
  return y;
}

std::vector<std::string> numbered_words(std::size_t count) {
  std::vector<std::string> words(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string suffix;
    std::size_t v = i;
    for (int j = 0; j < 4; ++j) {
      suffix.push_back(static_cast<char>('a' + v % 26));
      v /= 26;
    }
    words[i] = "w" + suffix;
  }
  return words;
}

void bm_fit_least_squares(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto d = static_cast<Eigen::Index>(state.range(1));
  const Eigen::MatrixXd X = random_matrix(n, d, 1);
  const Eigen::VectorXd y = random_vector(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_least_squares(X, y, 0.0));
  }
}
BENCHMARK(bm_fit_least_squares)->Args({216, 300})->Args({1000, 300});

void bm_repeated_cv(benchmark::State& state) {
  const Eigen::MatrixXd X = random_matrix(216, 300, 3);
  const Eigen::VectorXd y = random_vector(216, 4);
  const auto reps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(repeated_cv_correlation(X, y, 10, reps, 1e-6, 5));
  }
}
BENCHMARK(bm_repeated_cv)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_kmeans(benchmark::State& state) {
  const Eigen::MatrixXd points = random_matrix(1678, 32, 6);
  const auto k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans_pp(points, k, 7));
  }
}
BENCHMARK(bm_kmeans)->Arg(5)->Unit(benchmark::kMillisecond);

void bm_permutation_test(benchmark::State& state) {
  Rng rng = make_rng(8);
  std::vector<double> values(1678);
  for (auto& v : values) v = standard_normal(rng);
  const std::vector<std::size_t> sizes = {400, 1278};
  const auto shuffles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        permutation_group_test(values, sizes, GroupStatistic::mean, 0, shuffles, 9));
  }
}
BENCHMARK(bm_permutation_test)->Arg(10000)->Unit(benchmark::kMillisecond);

void bm_kya_pairs(benchmark::State& state) {
  // Matched-pair decisions over planted two-topic sessions.
  const auto words = numbered_words(216);
  Rng rng = make_rng(10);
  EmbeddingMatrix emb;
  emb.tokens = words;
  emb.dim = 300;
  emb.values.resize(words.size() * emb.dim);
  for (auto& v : emb.values) v = static_cast<float>(standard_normal(rng));
  emb.finalize();

  PopulationOptions options;
  options.count = 200;
  options.topics = 2;
  options.taste_jitter = 0.3;
  const auto population = make_population(options, words, &emb, 11);
  std::vector<RaterRecord> records;
  for (std::size_t r = 0; r < population.size(); ++r) {
    records.push_back(simulate_rater(population[r], words, derive_seed(12, r)));
  }
  std::size_t pairs = 0;
  for (auto _ : state) {
    const auto result = run_kya(records, emb, KyaVariant::normal);
    pairs = result.eligible;
    benchmark::DoNotOptimize(result);
  }
  state.counters["pairs"] = static_cast<double>(pairs);
}
BENCHMARK(bm_kya_pairs)->Unit(benchmark::kMillisecond);

void bm_simulate_session(benchmark::State& state) {
  const auto words = numbered_words(216);
  RaterProfile profile;
  profile.rater_id = "bench";
  profile.preference_order.resize(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    profile.preference_order[i] = static_cast<uint32_t>(i);
  }
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_rater(profile, words, ++seed));
  }
}
BENCHMARK(bm_simulate_session);

void bm_simulate_cascade(benchmark::State& state) {
  WordList wordlist;
  wordlist.words = numbered_words(1000);
  PopulationOptions options;
  options.count = 50;
  options.noise = 0.1;
  const auto population = make_population(options, wordlist.words, nullptr, 13);
  StageParams params;
  params.stage3_word_count = 36;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_cascade(wordlist, population, params, 14));
  }
}
BENCHMARK(bm_simulate_cascade)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
