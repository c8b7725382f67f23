#include "humorkit/protocol_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

#include <Eigen/Dense>

#include "humorkit/errors.hpp"
#include "humorkit/parallel.hpp"
#include "humorkit/rng.hpp"

namespace humorkit {
namespace {

bool is_power_of_six(std::size_t n) {
  if (n < 6) return false;
  while (n % 6 == 0) n /= 6;
  return n == 1;
}

void validate_profile(const RaterProfile& profile, std::size_t word_count) {
  if (profile.noise < 0.0 || profile.noise > 1.0) {
    throw DataError("rater profile: noise outside [0, 1]");
  }
  if (profile.preference_order.size() != word_count) {
    throw DataError("rater profile: preference order does not cover the word set");
  }
  std::vector<bool> seen(word_count, false);
  for (const uint32_t idx : profile.preference_order) {
    if (idx >= word_count || seen[idx]) {
      throw DataError("rater profile: preference order is not a permutation");
    }
    seen[idx] = true;
  }
  if (profile.position_bias) {
    double sum = 0.0;
    for (const double p : *profile.position_bias) {
      if (p < 0.0) throw DataError("rater profile: negative position bias");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DataError("rater profile: position bias does not sum to 1");
    }
  }
}

// Position of a random click: the bias distribution when present, otherwise
// uniform over the sextuple.
std::size_t random_position(const RaterProfile& profile, std::size_t group_size, Rng& rng) {
  if (!profile.position_bias || group_size != 6) {
    return static_cast<std::size_t>(uniform_below(rng, group_size));
  }
  const double r = uniform_real(rng);
  double cum = 0.0;
  for (std::size_t p = 0; p < 6; ++p) {
    cum += (*profile.position_bias)[p];
    if (r < cum) return p;
  }
  return 5;
}

// One sextuple decision: the rater clicks the best-ranked word, unless the
// noise coin flips and the click lands on a (possibly biased) position.
std::size_t choose_position(const RaterProfile& profile, std::span<const uint32_t> group,
                            const std::vector<uint32_t>& rank, Rng& rng) {
  if (profile.noise > 0.0 && uniform_real(rng) < profile.noise) {
    return random_position(profile, group.size(), rng);
  }
  std::size_t best = 0;
  for (std::size_t p = 1; p < group.size(); ++p) {
    if (rank[group[p]] < rank[group[best]]) best = p;
  }
  return best;
}

std::vector<uint32_t> rank_of(const std::vector<uint32_t>& preference_order) {
  std::vector<uint32_t> rank(preference_order.size());
  for (std::size_t r = 0; r < preference_order.size(); ++r) {
    rank[preference_order[r]] = static_cast<uint32_t>(r);
  }
  return rank;
}

}  // namespace

RaterRecord simulate_rater(const RaterProfile& profile, std::span<const std::string> words,
                           uint64_t seed, SimStats* stats) {
  const std::size_t n = words.size();
  if (!is_power_of_six(n)) {
    throw DataError("simulate_rater: word count " + std::to_string(n) +
                    " is not a power of six");
  }
  validate_profile(profile, n);

  SimStats local_stats;
  local_stats.nonstandard_word_count = n != 216;

  const std::vector<uint32_t> rank = rank_of(profile.preference_order);
  Rng rng = make_rng(seed);

  std::vector<int> click_counts(n, 0);
  std::vector<uint32_t> survivors(n);
  for (std::size_t i = 0; i < n; ++i) survivors[i] = static_cast<uint32_t>(i);

  while (survivors.size() >= 6) {
    shuffle(survivors, rng);
    std::vector<uint32_t> winners;
    winners.reserve(survivors.size() / 6);
    for (std::size_t g = 0; g < survivors.size(); g += 6) {
      const std::span<const uint32_t> group(survivors.data() + g, 6);
      const std::size_t position = choose_position(profile, group, rank, rng);
      const uint32_t picked = group[position];
      ++click_counts[picked];
      ++local_stats.clicks;
      ++local_stats.position_click_counts[position];
      winners.push_back(picked);
    }
    survivors = std::move(winners);
  }

  RaterRecord record;
  record.rater_id = profile.rater_id;
  record.gender = profile.gender;
  record.age = profile.age;
  record.country = profile.country;
  for (std::size_t i = 0; i < n; ++i) record.ratings.emplace(words[i], click_counts[i]);
  record.complete = has_standard_composition(record);
  if (stats) *stats = local_stats;
  return record;
}

OrderCheckReport check_expected_order(const RaterProfile& profile,
                                      std::span<const std::string> words, std::size_t trials,
                                      uint64_t seed, unsigned threads) {
  if (profile.noise != 0.0) {
    throw DataError("expected-order check requires a noiseless profile");
  }
  if (trials < 1) throw DataError("expected-order check requires at least one trial");

  const std::size_t n = words.size();

  // Fixed-size trial chunks keep the accumulation identical for any thread
  // count: partial sums live in per-chunk slots and reduce in chunk order.
  constexpr std::size_t kChunk = 1024;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> sums(chunks, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> sum_squares(chunks, std::vector<double>(n, 0.0));

  parallel_for(chunks, threads, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kChunk;
    const std::size_t end = std::min(trials, begin + kChunk);
    for (std::size_t t = begin; t < end; ++t) {
      const RaterRecord record = simulate_rater(profile, words, derive_seed(seed, t));
      for (std::size_t i = 0; i < n; ++i) {
        const double rating = double(record.ratings.at(words[i]));
        sums[chunk][i] += rating;
        sum_squares[chunk][i] += rating * rating;
      }
    }
  });

  std::vector<double> mean(n, 0.0);
  std::vector<double> variance(n, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] += sums[c][i];
      variance[i] += sum_squares[c][i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] /= double(trials);
    variance[i] = std::max(0.0, variance[i] / double(trials) - mean[i] * mean[i]);
  }

  OrderCheckReport report;
  report.trials = trials;
  report.pairs_checked = n - 1;
  report.low_power = trials < 100;
  for (std::size_t r = 0; r + 1 < n; ++r) {
    const std::size_t hi = profile.preference_order[r];      // preferred
    const std::size_t lo = profile.preference_order[r + 1];  // its successor
    const double gap = mean[lo] - mean[hi];  // positive means inverted
    if (gap <= 0.0) continue;
    ++report.inversions;
    const double se = std::sqrt((variance[hi] + variance[lo]) / double(trials));
    const double z = se > 0.0 ? gap / se : std::numeric_limits<double>::infinity();
    report.max_z = std::max(report.max_z, z);
    if (z > 3.0) ++report.beyond_tolerance;
  }
  return report;
}

namespace {

struct StageOutcome {
  std::vector<std::size_t> views;
  std::vector<std::size_t> picks;
};

// One filtering stage: every word appears in `min_views` shuffled passes of
// sextuples, each sextuple is judged by a (seeded) random rater, and the
// tallies record how often each word was shown and how often it won.  In
// stage 1 a rater may decline the whole sextuple when even their favorite of
// the six sits too deep in their personal ranking.
StageOutcome run_filter_stage(const std::vector<uint32_t>& candidates, std::size_t universe_size,
                              const std::vector<RaterProfile>& population,
                              const std::vector<std::vector<uint32_t>>& ranks,
                              std::size_t min_views, bool none_option, double none_top_fraction,
                              uint64_t seed) {
  if (candidates.size() < 6) throw DataError("cascade: fewer than six candidate words");

  StageOutcome outcome;
  outcome.views.assign(candidates.size(), 0);
  outcome.picks.assign(candidates.size(), 0);

  // Positions in `candidates`, reshuffled each pass.
  std::vector<uint32_t> order(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) order[i] = static_cast<uint32_t>(i);

  const double none_threshold = none_top_fraction * double(universe_size);

  for (std::size_t pass = 0; pass < min_views; ++pass) {
    Rng rng = make_rng(derive_seed(seed, pass));
    shuffle(order, rng);

    std::vector<uint32_t> group(6);
    for (std::size_t g = 0; g < order.size(); g += 6) {
      for (std::size_t p = 0; p < 6; ++p) {
        // A ragged tail wraps around; the wrapped words get an extra view.
        group[p] = order[(g + p) % order.size()];
      }

      const std::size_t rater = uniform_below(rng, population.size());
      const RaterProfile& profile = population[rater];
      const std::vector<uint32_t>& rank = ranks[rater];

      for (const uint32_t slot : group) ++outcome.views[slot];

      std::size_t best = 0;
      for (std::size_t p = 1; p < 6; ++p) {
        if (rank[candidates[group[p]]] < rank[candidates[group[best]]]) best = p;
      }
      bool clicked = true;
      if (profile.noise > 0.0 && uniform_real(rng) < profile.noise) {
        best = random_position(profile, 6, rng);
      } else if (none_option && double(rank[candidates[group[best]]]) >= none_threshold) {
        clicked = false;  // none of these six is funny to this rater
      }
      if (clicked) ++outcome.picks[group[best]];
    }
  }
  return outcome;
}

std::string stem_of(const std::string& word, std::size_t prefix) {
  return word.size() <= prefix ? word : word.substr(0, prefix);
}

}  // namespace

SimulatedStudy simulate_cascade(const WordList& wordlist,
                                const std::vector<RaterProfile>& population,
                                const StageParams& params, uint64_t seed, unsigned threads) {
  if (population.empty()) throw DataError("cascade: empty population");
  if (population.size() < params.stage1_min_views) {
    throw DataError("cascade: population smaller than the per-word view quota");
  }
  if (!is_power_of_six(params.stage3_word_count)) {
    throw DataError("cascade: stage3 word count must be a power of six");
  }
  const std::size_t universe = wordlist.size();
  if (universe < params.stage3_word_count) {
    throw DataError("cascade: word list smaller than the stage3 word count");
  }

  std::vector<std::vector<uint32_t>> ranks;
  ranks.reserve(population.size());
  for (const auto& profile : population) {
    validate_profile(profile, universe);
    ranks.push_back(rank_of(profile.preference_order));
  }

  SimulatedStudy study;
  study.seed = seed;

  // Stage 1: everything, with the none-option; majority of shown sextuples
  // (ties included) advances, and unpicked words are dropped outright.
  std::vector<uint32_t> stage1_candidates(universe);
  for (std::size_t i = 0; i < universe; ++i) stage1_candidates[i] = static_cast<uint32_t>(i);
  const StageOutcome s1 =
      run_filter_stage(stage1_candidates, universe, population, ranks, params.stage1_min_views,
                       true, params.none_top_fraction, derive_seed(seed, 1));

  study.stage1.words = wordlist.words;
  study.stage1.views = s1.views;
  study.stage1.picks = s1.picks;
  std::vector<uint32_t> stage2_candidates;
  for (std::size_t i = 0; i < universe; ++i) {
    if (s1.picks[i] > 0 && 2 * s1.picks[i] >= s1.views[i]) {
      stage2_candidates.push_back(static_cast<uint32_t>(i));
      study.stage1.advancing.push_back(wordlist.words[i]);
    }
  }
  if (stage2_candidates.size() < params.stage3_word_count) {
    throw DataError("cascade: only " + std::to_string(stage2_candidates.size()) +
                    " words survived stage 1, need " +
                    std::to_string(params.stage3_word_count));
  }

  // Stage 2: heavier sampling, no opt-out; words are ranked by win rate.
  const StageOutcome s2 =
      run_filter_stage(stage2_candidates, universe, population, ranks, params.stage2_min_views,
                       false, 0.0, derive_seed(seed, 2));
  study.stage2.views = s2.views;
  study.stage2.picks = s2.picks;
  for (const uint32_t c : stage2_candidates) study.stage2.words.push_back(wordlist.words[c]);

  std::vector<std::size_t> ranking(stage2_candidates.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) ranking[i] = i;
  const auto score = [&](std::size_t i) {
    return s2.views[i] == 0 ? 0.0 : double(s2.picks[i]) / double(s2.views[i]);
  };
  std::sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
    const double sa = score(a);
    const double sb = score(b);
    if (sa != sb) return sa > sb;
    if (s2.views[a] != s2.views[b]) return s2.views[a] > s2.views[b];
    return wordlist.words[stage2_candidates[a]] < wordlist.words[stage2_candidates[b]];
  });

  // Greedy stem deduplication down the ranking: the best-scoring member of
  // each shared-prefix family survives.
  std::unordered_set<std::string> stems;
  std::vector<uint32_t> stage3_indices;
  for (const std::size_t i : ranking) {
    if (stage3_indices.size() == params.stage3_word_count) break;
    const std::string& word = wordlist.words[stage2_candidates[i]];
    if (!stems.insert(stem_of(word, params.stem_prefix)).second) continue;
    stage3_indices.push_back(stage2_candidates[i]);
    study.stage2.advancing.push_back(word);
  }
  if (stage3_indices.size() < params.stage3_word_count) {
    throw DataError("cascade: stem dedup left only " + std::to_string(stage3_indices.size()) +
                    " words, need " + std::to_string(params.stage3_word_count));
  }
  for (const uint32_t i : stage3_indices) study.stage3_words.push_back(wordlist.words[i]);

  // Stage 3: every rater runs a full session over the surviving words, with
  // their preference order restricted to those words.
  std::vector<int32_t> stage3_position(universe, -1);
  for (std::size_t i = 0; i < stage3_indices.size(); ++i) {
    stage3_position[stage3_indices[i]] = static_cast<int32_t>(i);
  }
  study.records.resize(population.size());
  parallel_for(population.size(), threads, [&](std::size_t r) {
    RaterProfile restricted = population[r];
    restricted.preference_order.clear();
    for (const uint32_t w : population[r].preference_order) {
      // Keep the original relative order, reindexed into the stage-3 set.
      if (stage3_position[w] >= 0) {
        restricted.preference_order.push_back(static_cast<uint32_t>(stage3_position[w]));
      }
    }
    study.records[r] =
        simulate_rater(restricted, study.stage3_words, derive_seed(seed, 1000 + r));
  });
  return study;
}

std::vector<RaterProfile> make_population(const PopulationOptions& options,
                                          std::span<const std::string> words,
                                          const EmbeddingMatrix* emb, uint64_t seed) {
  if (options.count == 0) throw DataError("population: count must be positive");
  if (options.gender_skew < 0.0 || options.gender_skew > 0.5) {
    throw DataError("population: gender skew outside [0, 0.5]");
  }
  const std::size_t n = words.size();

  // Topic centers: random unit directions in embedding space.
  std::vector<Eigen::VectorXd> centers;
  const bool topical = options.topics > 0 && emb != nullptr;
  if (topical) {
    Rng center_rng = make_rng(derive_seed(seed, 0xc0ffee));
    for (std::size_t t = 0; t < options.topics; ++t) {
      Eigen::VectorXd c(static_cast<Eigen::Index>(emb->dim));
      for (std::size_t j = 0; j < emb->dim; ++j) {
        c(static_cast<Eigen::Index>(j)) = standard_normal(center_rng);
      }
      const double norm = c.norm();
      if (norm > 0.0) c /= norm;
      centers.push_back(std::move(c));
    }
  }

  std::vector<RaterProfile> population(options.count);
  for (std::size_t r = 0; r < options.count; ++r) {
    Rng rng = make_rng(derive_seed(seed, 1 + r));
    RaterProfile& profile = population[r];

    char id[16];
    std::snprintf(id, sizeof(id), "r%05zu", r);
    profile.rater_id = id;
    profile.noise = options.noise;
    profile.position_bias = options.position_bias;

    const std::size_t topic = topical ? r % options.topics : 0;
    if (topical) {
      Eigen::VectorXd taste = centers[topic];
      for (Eigen::Index j = 0; j < taste.size(); ++j) {
        taste(j) += options.taste_jitter * standard_normal(rng);
      }
      const double norm = taste.norm();
      if (norm > 0.0) taste /= norm;

      std::vector<double> scores(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = lookup(*emb, words[i]);
        if (!row) continue;  // unknown words sink to the bottom together
        double dot = 0.0;
        for (std::size_t j = 0; j < emb->dim; ++j) {
          dot += taste(static_cast<Eigen::Index>(j)) * (*row)[j];
        }
        scores[i] = dot;
      }
      profile.preference_order.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        profile.preference_order[i] = static_cast<uint32_t>(i);
      }
      std::sort(profile.preference_order.begin(), profile.preference_order.end(),
                [&](uint32_t a, uint32_t b) {
                  if (scores[a] != scores[b]) return scores[a] > scores[b];
                  return a < b;
                });
    } else {
      profile.preference_order.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        profile.preference_order[i] = static_cast<uint32_t>(i);
      }
      shuffle(profile.preference_order, rng);
    }

    // Demographics: even topics lean female and younger, odd topics lean
    // male and older, by the configured skews.
    const double lean = topic % 2 == 0 ? 1.0 : -1.0;
    const double female_p = 0.5 + options.gender_skew * lean;
    profile.gender = uniform_real(rng) < female_p ? Gender::female : Gender::male;
    const double age_mean = 38.0 - options.age_skew * lean;
    const double age = age_mean + 8.0 * standard_normal(rng);
    profile.age = std::min(80.0, std::max(18.0, age));
  }
  return population;
}

}  // namespace humorkit
