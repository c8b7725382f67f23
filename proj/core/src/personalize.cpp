#include "humorkit/personalize.hpp"

#include <algorithm>
#include <set>

#include "humorkit/errors.hpp"
#include "humorkit/parallel.hpp"

namespace humorkit {

SenseOfHumorVector sense_of_humor_vector(const RaterRecord& record, const EmbeddingMatrix& emb,
                                         int tier_filter, bool renormalize) {
  SenseOfHumorVector out;
  out.rater_id = record.rater_id;
  out.vector = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.dim));

  for (const auto& [word, rating] : record.ratings) {
    if (rating < tier_filter) continue;
    const auto row = lookup(emb, word);
    if (!row) {
      out.missing_words.push_back(word);
      continue;
    }
    for (std::size_t j = 0; j < emb.dim; ++j) {
      out.vector(static_cast<Eigen::Index>(j)) += (*row)[j];
    }
    ++out.source_word_count;
  }

  if (out.source_word_count == 0) return out;  // valid stays false
  out.vector /= double(out.source_word_count);
  if (renormalize) {
    const double norm = out.vector.norm();
    if (norm > 0.0) out.vector /= norm;
  }
  out.valid = true;
  return out;
}

std::string_view kya_variant_name(KyaVariant v) {
  switch (v) {
    case KyaVariant::easy: return "easy";
    case KyaVariant::normal: return "normal";
    case KyaVariant::hard: return "hard";
  }
  return "normal";
}

namespace {

// Training words for a rater under a variant: the five rating-2 words in the
// hard regime, otherwise every positive word except the rater's own top word.
std::vector<std::string> training_words(const RaterRecord& record, const std::string& top,
                                        KyaVariant variant) {
  std::vector<std::string> out;
  if (variant == KyaVariant::hard) {
    out = record.words_with_rating(2);
  } else {
    for (const auto& [word, rating] : record.ratings) {
      if (rating >= 1 && word != top) out.push_back(word);
    }
  }
  return out;
}

bool is_pair_eligible(const RaterRecord& a, const std::string& top_a, const RaterRecord& b,
                      const std::string& top_b) {
  if (top_a == top_b) return false;
  const auto ita = a.ratings.find(top_b);
  if (ita == a.ratings.end() || ita->second != 0) return false;
  const auto itb = b.ratings.find(top_a);
  if (itb == b.ratings.end() || itb->second != 0) return false;
  return true;
}

bool disjoint_sorted(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    const int cmp = ia->compare(*ib);
    if (cmp == 0) return false;
    if (cmp < 0) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return true;
}

struct Participant {
  std::size_t record_index = 0;
  std::string top;
  Eigen::VectorXd top_vector;
  Eigen::VectorXd profile;
  std::vector<std::string> train;  // sorted, for the disjointness check
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(
    const std::vector<RaterRecord>& records, KyaVariant variant) {
  std::vector<std::optional<std::string>> tops(records.size());
  std::vector<std::vector<std::string>> trains(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    tops[i] = records[i].top_word();
    if (tops[i] && variant == KyaVariant::easy) {
      trains[i] = training_words(records[i], *tops[i], variant);
      std::sort(trains[i].begin(), trains[i].end());
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!tops[i]) continue;
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (!tops[j]) continue;
      if (!is_pair_eligible(records[i], *tops[i], records[j], *tops[j])) continue;
      if (variant == KyaVariant::easy && !disjoint_sorted(trains[i], trains[j])) continue;
      out.emplace_back(i, j);
    }
  }
  return out;
}

MatchOutcome kya_match(const Eigen::VectorXd& word1, const Eigen::VectorXd& word2,
                       const Eigen::VectorXd& profile1, const Eigen::VectorXd& profile2) {
  if (word1.size() != word2.size() || word1.size() != profile1.size() ||
      word1.size() != profile2.size()) {
    throw NumericalError("kya_match: dimension mismatch");
  }
  const double agreement = (word1 - word2).dot(profile1 - profile2);
  if (agreement > 0.0) return MatchOutcome::success;
  if (agreement == 0.0) return MatchOutcome::tie;
  return MatchOutcome::failure;
}

KyaResult run_kya(const std::vector<RaterRecord>& records, const EmbeddingMatrix& emb,
                  KyaVariant variant, bool renormalize, unsigned threads) {
  KyaResult result;
  result.variant = variant;

  std::vector<Participant> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto top = records[i].top_word();
    if (!top) {
      result.excluded_raters.push_back(records[i].rater_id);
      continue;
    }
    const auto top_row = lookup(emb, *top);
    if (!top_row) {
      result.excluded_raters.push_back(records[i].rater_id);
      continue;
    }

    Participant p;
    p.record_index = i;
    p.top = *top;
    p.top_vector = Eigen::VectorXd(static_cast<Eigen::Index>(emb.dim));
    for (std::size_t j = 0; j < emb.dim; ++j) {
      p.top_vector(static_cast<Eigen::Index>(j)) = (*top_row)[j];
    }
    p.train = training_words(records[i], *top, variant);
    std::sort(p.train.begin(), p.train.end());

    // Profile over the variant's training words; OOV words drop out, and a
    // rater with nothing left cannot be matched at all.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.dim));
    std::size_t used = 0;
    for (const auto& word : p.train) {
      const auto row = lookup(emb, word);
      if (!row) continue;
      for (std::size_t j = 0; j < emb.dim; ++j) sum(static_cast<Eigen::Index>(j)) += (*row)[j];
      ++used;
    }
    if (used == 0) {
      result.excluded_raters.push_back(records[i].rater_id);
      continue;
    }
    sum /= double(used);
    if (renormalize) {
      const double norm = sum.norm();
      if (norm > 0.0) sum /= norm;
    }
    p.profile = std::move(sum);
    kept.push_back(std::move(p));
  }

  const std::size_t n = kept.size();
  std::vector<std::size_t> eligible_per_row(n, 0);
  std::vector<std::size_t> success_per_row(n, 0);
  std::vector<std::size_t> tie_per_row(n, 0);

  parallel_for(n, threads, [&](std::size_t i) {
    const Participant& a = kept[i];
    const RaterRecord& ra = records[a.record_index];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Participant& b = kept[j];
      const RaterRecord& rb = records[b.record_index];
      if (!is_pair_eligible(ra, a.top, rb, b.top)) continue;
      if (variant == KyaVariant::easy && !disjoint_sorted(a.train, b.train)) continue;
      ++eligible_per_row[i];
      switch (kya_match(a.top_vector, b.top_vector, a.profile, b.profile)) {
        case MatchOutcome::success: ++success_per_row[i]; break;
        case MatchOutcome::tie: ++tie_per_row[i]; break;
        case MatchOutcome::failure: break;
      }
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    result.eligible += eligible_per_row[i];
    result.successes += success_per_row[i];
    result.ties += tie_per_row[i];
  }
  result.success_rate =
      result.eligible == 0 ? 0.0 : double(result.successes) / double(result.eligible);
  result.eligibility_fraction =
      n < 2 ? 0.0 : double(result.eligible) / (double(n) * double(n - 1) / 2.0);
  return result;
}

}  // namespace humorkit
