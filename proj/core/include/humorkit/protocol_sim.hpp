#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "humorkit/datasets.hpp"
#include "humorkit/embedding.hpp"

namespace humorkit {

// A simulated participant: a secret full preference order over the word set
// (funniest first), a chance of clicking at random instead, and an optional
// per-position click distribution used whenever a random click happens.
struct RaterProfile {
  std::string rater_id;
  std::vector<uint32_t> preference_order;  // indices into the word set
  double noise = 0.0;                      // in [0, 1]
  std::optional<std::array<double, 6>> position_bias;  // sums to 1 when present
  std::optional<Gender> gender;
  std::optional<double> age;
  std::optional<std::string> country;
};

struct SimStats {
  std::size_t clicks = 0;
  std::array<std::size_t, 6> position_click_counts{};
  bool nonstandard_word_count = false;  // anything other than 216 words
};

// Run one forced-choice session: the words are shuffled into sextuples, each
// sextuple yields one click, and winners cascade into ever smaller rounds
// until a single word remains.  A word's rating is its total click count, so
// a 216-word session ends with the 180/30/5/1 composition after 43 clicks.
// The word count must be a power of six.
RaterRecord simulate_rater(const RaterProfile& profile, std::span<const std::string> words,
                           uint64_t seed, SimStats* stats = nullptr);

// Monte Carlo check that expected ratings are monotone in the preference
// order for a noiseless rater.
struct OrderCheckReport {
  std::size_t trials = 0;
  std::size_t pairs_checked = 0;      // adjacent pairs in the preference order
  std::size_t inversions = 0;         // empirical means out of order at all
  std::size_t beyond_tolerance = 0;   // out of order beyond 3 standard errors
  double max_z = 0.0;                 // largest inversion in standard errors
  bool low_power = false;             // too few trials to mean much
};

OrderCheckReport check_expected_order(const RaterProfile& profile,
                                      std::span<const std::string> words, std::size_t trials,
                                      uint64_t seed, unsigned threads = 1);

struct StageParams {
  std::size_t stage1_min_views = 3;   // sextuple appearances per word, stage 1
  double none_top_fraction = 0.25;    // how deep a rater's taste reaches before "none"
  std::size_t stage2_min_views = 15;  // sextuple appearances per word, stage 2
  std::size_t stage3_word_count = 216;
  std::size_t stem_prefix = 4;        // shared-prefix length treated as one stem
};

struct StageTally {
  std::vector<std::string> words;   // candidates entering the stage
  std::vector<std::size_t> views;   // sextuples containing each word
  std::vector<std::size_t> picks;   // sextuples the word won
  std::vector<std::string> advancing;
};

struct SimulatedStudy {
  std::vector<RaterRecord> records;  // stage-3 sessions, one per rater
  StageTally stage1;
  StageTally stage2;
  std::vector<std::string> stage3_words;
  uint64_t seed = 0;
};

// The full filtering cascade: a large word list is winnowed by majority vote
// (with a "none of these" option), then by pick-rate ranking with stem
// deduplication, and the survivors get complete per-rater sessions.
SimulatedStudy simulate_cascade(const WordList& wordlist,
                                const std::vector<RaterProfile>& population,
                                const StageParams& params, uint64_t seed, unsigned threads = 1);

struct PopulationOptions {
  std::size_t count = 0;
  double noise = 0.0;
  std::optional<std::array<double, 6>> position_bias;
  std::size_t topics = 0;     // 0 = fully random tastes
  double taste_jitter = 0.5;  // spread of tastes around a topic center
  double gender_skew = 0.0;   // female probability offset by topic, in [0, 0.5]
  double age_skew = 0.0;      // mean-age offset by topic, in years
};

// Build a synthetic population.  With topics > 0 and an embedding, tastes
// cluster around random topic directions and the preference orders follow
// taste-vs-word similarity; otherwise preference orders are uniform shuffles.
std::vector<RaterProfile> make_population(const PopulationOptions& options,
                                          std::span<const std::string> words,
                                          const EmbeddingMatrix* emb, uint64_t seed);

}  // namespace humorkit
