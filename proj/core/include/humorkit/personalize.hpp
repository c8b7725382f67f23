#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "humorkit/datasets.hpp"
#include "humorkit/embedding.hpp"

namespace humorkit {

// One rater's taste, summarized as the mean embedding of words they rated at
// or above a cutoff.
struct SenseOfHumorVector {
  std::string rater_id;
  Eigen::VectorXd vector;
  std::size_t source_word_count = 0;
  std::vector<std::string> missing_words;  // rated words absent from the embedding
  bool valid = false;
};

// tier_filter selects the word set: ratings >= tier_filter contribute.  With
// renormalize the mean is scaled back to unit length, which keeps vectors
// comparable across raters with different word counts.
SenseOfHumorVector sense_of_humor_vector(const RaterRecord& record, const EmbeddingMatrix& emb,
                                         int tier_filter = 1, bool renormalize = true);

// The three audience-matching regimes.  `easy` builds each profile vector
// from training words disjoint from the other rater's; `normal` uses all 35
// positively rated words; `hard` restricts profiles to the five rating-2
// words.
enum class KyaVariant { easy, normal, hard };

std::string_view kya_variant_name(KyaVariant v);

// A pair (i, j) qualifies when the two raters' top words differ and each
// rater rated the other's top word zero.
std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(
    const std::vector<RaterRecord>& records, KyaVariant variant);

enum class MatchOutcome { success, failure, tie };

// Decide a pair by whether the rating difference and the profile difference
// agree in sign: (r1 - r2) . (v1 - v2) > 0.
MatchOutcome kya_match(const Eigen::VectorXd& word1, const Eigen::VectorXd& word2,
                       const Eigen::VectorXd& profile1, const Eigen::VectorXd& profile2);

struct KyaResult {
  KyaVariant variant = KyaVariant::normal;
  std::size_t eligible = 0;
  std::size_t successes = 0;
  std::size_t ties = 0;
  double success_rate = 0.0;
  std::vector<std::string> excluded_raters;  // no usable profile or missing test word
  double eligibility_fraction = 0.0;         // eligible / all pairs of kept raters
};

KyaResult run_kya(const std::vector<RaterRecord>& records, const EmbeddingMatrix& emb,
                  KyaVariant variant, bool renormalize = true, unsigned threads = 1);

}  // namespace humorkit
