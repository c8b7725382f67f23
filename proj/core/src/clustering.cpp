#include "humorkit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "humorkit/errors.hpp"
#include "humorkit/parallel.hpp"
#include "humorkit/rng.hpp"

namespace humorkit {
namespace {

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index row,
                        const Eigen::MatrixXd& centroids, Eigen::Index centroid) {
  return (points.row(row) - centroids.row(centroid)).squaredNorm();
}

// One full k-means run from one seed; single-threaded on purpose, restarts
// are the parallel axis.
ClusterModel single_kmeans(const Eigen::MatrixXd& points, int k, uint64_t seed,
                           const KmeansOptions& options) {
  const Eigen::Index n = points.rows();
  Rng rng = make_rng(seed);

  ClusterModel model;
  model.k = k;
  model.seed = seed;
  model.centroids.resize(k, points.cols());
  model.assignments.assign(static_cast<std::size_t>(n), 0);

  // Distance-squared seeding: each next centroid is sampled with probability
  // proportional to its squared distance from the nearest chosen one.
  std::vector<double> dist2(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::infinity());
  const Eigen::Index first = static_cast<Eigen::Index>(uniform_below(rng, uint64_t(n)));
  model.centroids.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = squared_distance(points, i, model.centroids, c - 1);
      auto& best = dist2[static_cast<std::size_t>(i)];
      best = std::min(best, d);
      total += best;
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double r = uniform_real(rng) * total;
      double cum = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2[static_cast<std::size_t>(i)];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_below(rng, uint64_t(n)));
    }
    model.centroids.row(c) = points.row(pick);
  }

  std::vector<double> min_dist2(static_cast<std::size_t>(n), 0.0);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // Assignment step; ties go to the lowest centroid index.
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = squared_distance(points, i, model.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points, i, model.centroids, c);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      model.assignments[static_cast<std::size_t>(i)] = best_c;
      min_dist2[static_cast<std::size_t>(i)] = best_d;
      inertia += best_d;
    }
    model.inertia = inertia;
    model.inertia_trace.push_back(inertia);
    model.iterations = iter;

    // Update step.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = model.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    Eigen::MatrixXd next = model.centroids;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / double(counts[static_cast<std::size_t>(c)]);
      }
    }
    // An empty cluster steals the point farthest from its own centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (min_dist2[static_cast<std::size_t>(i)] > far_d) {
          far_d = min_dist2[static_cast<std::size_t>(i)];
          farthest = i;
        }
      }
      next.row(c) = points.row(farthest);
      min_dist2[static_cast<std::size_t>(farthest)] = 0.0;
    }

    const double shift = (next - model.centroids).norm();
    model.centroids = std::move(next);
    if (shift < options.tol) break;
  }

  // Sync assignments and inertia with the final centroids.
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best_c = 0;
    double best_d = squared_distance(points, i, model.centroids, 0);
    for (int c = 1; c < k; ++c) {
      const double d = squared_distance(points, i, model.centroids, c);
      if (d < best_d) {
        best_d = d;
        best_c = c;
      }
    }
    model.assignments[static_cast<std::size_t>(i)] = best_c;
    inertia += best_d;
  }
  model.inertia = inertia;
  model.inertia_trace.push_back(inertia);
  return model;
}

}  // namespace

ClusterModel kmeans_pp(const Eigen::MatrixXd& points, int k, uint64_t seed,
                       const KmeansOptions& options) {
  if (k < 1) throw NumericalError("kmeans: k must be positive");
  if (points.rows() < k) throw NumericalError("kmeans: fewer points than clusters");
  if (!points.allFinite()) throw NumericalError("kmeans: non-finite input");
  if (options.n_init < 1) throw NumericalError("kmeans: n_init must be positive");

  std::vector<ClusterModel> restarts(static_cast<std::size_t>(options.n_init));
  parallel_for(restarts.size(), options.threads, [&](std::size_t r) {
    restarts[r] = single_kmeans(points, k, derive_seed(seed, r), options);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts.size(); ++r) {
    if (restarts[r].inertia < restarts[best].inertia) best = r;
  }
  ClusterModel model = std::move(restarts[best]);
  model.seed = seed;  // report the master seed, not the restart's derived one
  return model;
}

ElbowCurve elbow_curve(const Eigen::MatrixXd& points, int k_min, int k_max, uint64_t seed,
                       const KmeansOptions& options) {
  if (k_min < 1 || k_max < k_min) throw NumericalError("elbow: bad K range");
  ElbowCurve curve;
  for (int k = k_min; k <= k_max; ++k) {
    const ClusterModel model = kmeans_pp(points, k, derive_seed(seed, uint64_t(k)), options);
    curve.points.emplace_back(k, model.inertia);
  }
  if (curve.points.size() < 3) {
    curve.suggested_k = k_min;
    curve.degenerate_range = true;
    return curve;
  }
  // The sharpest bend maximizes the discrete second difference.
  double best_bend = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.points.size(); ++i) {
    const double bend = curve.points[i - 1].second - 2.0 * curve.points[i].second +
                        curve.points[i + 1].second;
    if (bend > best_bend) {
      best_bend = bend;
      curve.suggested_k = curve.points[i].first;
    }
  }
  return curve;
}

ClusterWordStats relative_means(const std::vector<RaterRecord>& records,
                                const std::vector<int>& assignments, int k) {
  if (records.size() != assignments.size()) {
    throw NumericalError("relative_means: records and assignments differ in length");
  }
  if (k < 1) throw NumericalError("relative_means: k must be positive");
  for (const int a : assignments) {
    if (a < 0 || a >= k) throw NumericalError("relative_means: assignment out of range");
  }

  ClusterWordStats stats;
  std::set<std::string> vocab;
  for (const auto& record : records) {
    for (const auto& [word, rating] : record.ratings) vocab.insert(word);
  }
  stats.words.assign(vocab.begin(), vocab.end());
  std::map<std::string, std::size_t> word_index;
  for (std::size_t w = 0; w < stats.words.size(); ++w) word_index.emplace(stats.words[w], w);

  stats.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
  for (const int a : assignments) ++stats.cluster_sizes[static_cast<std::size_t>(a)];

  std::vector<std::vector<double>> picks(static_cast<std::size_t>(k),
                                         std::vector<double>(stats.words.size(), 0.0));
  std::vector<double> total_picks(stats.words.size(), 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignments[i]);
    for (const auto& [word, rating] : records[i].ratings) {
      if (rating < 1) continue;
      const std::size_t w = word_index.at(word);
      picks[c][w] += 1.0;
      total_picks[w] += 1.0;
    }
  }

  const double n = double(records.size());
  stats.overall_fraction.resize(stats.words.size());
  for (std::size_t w = 0; w < stats.words.size(); ++w) {
    stats.overall_fraction[w] = total_picks[w] / n;
  }

  stats.relative_mean.assign(static_cast<std::size_t>(k),
                             std::vector<double>(stats.words.size(), 0.0));
  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (stats.cluster_sizes[cu] == 0) {
      stats.empty_clusters.push_back(c);
      for (std::size_t w = 0; w < stats.words.size(); ++w) {
        stats.relative_mean[cu][w] = std::numeric_limits<double>::quiet_NaN();
      }
      continue;
    }
    for (std::size_t w = 0; w < stats.words.size(); ++w) {
      stats.relative_mean[cu][w] =
          picks[cu][w] / double(stats.cluster_sizes[cu]) - stats.overall_fraction[w];
    }
  }
  return stats;
}

std::vector<std::pair<std::string, double>> ClusterWordStats::top_words(
    int cluster, std::size_t count, bool single_words_only) const {
  const auto& row = relative_mean.at(static_cast<std::size_t>(cluster));
  std::vector<std::size_t> order;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (single_words_only && words[w].find('_') != std::string::npos) continue;
    order.push_back(w);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return words[a] < words[b];
  });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < order.size() && i < count; ++i) {
    out.emplace_back(words[order[i]], row[order[i]]);
  }
  return out;
}

FeatureProfile cluster_feature_profile(const std::vector<RaterRecord>& records,
                                       const std::vector<int>& assignments, int k,
                                       const FeatureAnnotations& annotations,
                                       ProfileAggregation aggregation) {
  if (records.size() != assignments.size()) {
    throw NumericalError("feature profile: records and assignments differ in length");
  }

  FeatureProfile profile;
  profile.k = k;
  profile.aggregation = aggregation;

  std::set<std::string> uncovered;

  // Accumulate a per-scope mean of feature scores over picked words, where
  // scope is each cluster plus the whole population.  pooled_events weights a
  // word by its click count; per_rater_mean gives every rater equal say.
  const auto accumulate = [&](const std::vector<std::size_t>& member_indices,
                              std::array<double, kFeatureCount>& out) -> bool {
    std::array<double, kFeatureCount> sums{};
    double weight = 0.0;
    std::size_t raters_used = 0;
    for (const std::size_t i : member_indices) {
      std::array<double, kFeatureCount> rater_sums{};
      double rater_weight = 0.0;
      for (const auto& [word, rating] : records[i].ratings) {
        if (rating < 1) continue;
        const auto it = annotations.scores.find(word);
        if (it == annotations.scores.end()) {
          uncovered.insert(word);
          continue;
        }
        const double w = aggregation == ProfileAggregation::pooled_events ? double(rating) : 1.0;
        for (std::size_t f = 0; f < kFeatureCount; ++f) rater_sums[f] += w * it->second[f];
        rater_weight += w;
      }
      if (rater_weight == 0.0) continue;
      if (aggregation == ProfileAggregation::pooled_events) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) sums[f] += rater_sums[f];
        weight += rater_weight;
      } else {
        for (std::size_t f = 0; f < kFeatureCount; ++f) sums[f] += rater_sums[f] / rater_weight;
        weight += 1.0;
      }
      ++raters_used;
    }
    if (weight == 0.0) return false;
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = sums[f] / weight;
    return raters_used > 0;
  };

  std::vector<std::size_t> everyone(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) everyone[i] = i;
  if (!accumulate(everyone, profile.overall_mean)) {
    throw NumericalError("feature profile: no annotated picks in the population");
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (profile.overall_mean[f] == 0.0) {
      throw NumericalError("feature profile: zero overall mean for feature " +
                           std::string(kFeatureNames[f]));
    }
  }

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int a = assignments[i];
    if (a < 0 || a >= k) throw NumericalError("feature profile: assignment out of range");
    members[static_cast<std::size_t>(a)].push_back(i);
  }

  profile.ratio.assign(static_cast<std::size_t>(k), {});
  for (int c = 0; c < k; ++c) {
    std::array<double, kFeatureCount> cluster_mean{};
    if (!accumulate(members[static_cast<std::size_t>(c)], cluster_mean)) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        profile.ratio[static_cast<std::size_t>(c)][f] = std::numeric_limits<double>::quiet_NaN();
      }
      continue;
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      profile.ratio[static_cast<std::size_t>(c)][f] = cluster_mean[f] / profile.overall_mean[f];
    }
  }
  profile.uncovered_words = uncovered.size();
  return profile;
}

DemographicsReport cluster_demographics(const std::vector<RaterRecord>& records,
                                        const std::vector<int>& assignments, int k,
                                        std::size_t shuffles, uint64_t seed, unsigned threads) {
  if (records.size() != assignments.size()) {
    throw NumericalError("demographics: records and assignments differ in length");
  }

  DemographicsReport report;
  report.shuffles = shuffles;
  report.seed = seed;

  // Pool each attribute's values contiguously by cluster so the permutation
  // test can address a cluster as one block.
  std::vector<double> gender_values;
  std::vector<std::size_t> gender_sizes(static_cast<std::size_t>(k), 0);
  std::vector<double> age_values;
  std::vector<std::size_t> age_sizes(static_cast<std::size_t>(k), 0);
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (assignments[i] != c) continue;
      if (records[i].gender && *records[i].gender != Gender::other_unknown) {
        gender_values.push_back(*records[i].gender == Gender::female ? 1.0 : 0.0);
        ++gender_sizes[static_cast<std::size_t>(c)];
      }
      if (records[i].age) {
        age_values.push_back(*records[i].age);
        ++age_sizes[static_cast<std::size_t>(c)];
      }
    }
  }

  double female_sum = 0.0;
  for (const double v : gender_values) female_sum += v;
  report.overall_female_fraction =
      gender_values.empty() ? 0.0 : female_sum / double(gender_values.size());
  double age_sum = 0.0;
  for (const double v : age_values) age_sum += v;
  report.overall_mean_age = age_values.empty() ? 0.0 : age_sum / double(age_values.size());

  std::vector<std::size_t> cluster_sizes(static_cast<std::size_t>(k), 0);
  for (const int a : assignments) {
    if (a < 0 || a >= k) throw NumericalError("demographics: assignment out of range");
    ++cluster_sizes[static_cast<std::size_t>(a)];
  }

  for (int c = 0; c < k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    DemographicsReport::ClusterRow row;
    row.cluster = c;
    row.size = cluster_sizes[cu];
    row.known_gender = gender_sizes[cu];
    row.known_age = age_sizes[cu];

    if (row.known_gender > 0) {
      row.female_test = permutation_group_test(gender_values, gender_sizes,
                                               GroupStatistic::mean, cu, shuffles,
                                               derive_seed(seed, 2 * cu), Tail::two_sided,
                                               threads);
      row.female_fraction = row.female_test.observed;
      row.female_outside_null95 = row.female_fraction < row.female_test.null_q025 ||
                                  row.female_fraction > row.female_test.null_q975;
    }
    if (row.known_age > 0) {
      row.age_test = permutation_group_test(age_values, age_sizes, GroupStatistic::mean, cu,
                                            shuffles, derive_seed(seed, 2 * cu + 1),
                                            Tail::two_sided, threads);
      row.mean_age = row.age_test.observed;
      row.age_outside_null95 =
          row.mean_age < row.age_test.null_q025 || row.mean_age > row.age_test.null_q975;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

GroupDiffTable group_rating_diff(const std::vector<RaterRecord>& records, GroupAttribute attribute,
                                 const std::optional<std::pair<std::string, std::string>>& groups,
                                 const std::vector<std::string>* words) {
  GroupDiffTable table;

  // Resolve group membership per rater.
  std::vector<const RaterRecord*> group_a;
  std::vector<const RaterRecord*> group_b;
  if (attribute == GroupAttribute::gender) {
    table.group_a = groups ? groups->first : std::string(gender_name(Gender::female));
    table.group_b = groups ? groups->second : std::string(gender_name(Gender::male));
    const auto ga = gender_from_name(table.group_a);
    const auto gb = gender_from_name(table.group_b);
    if (!ga || !gb) throw DataError("group diff: unrecognized gender group name");
    for (const auto& record : records) {
      if (!record.gender) continue;
      if (*record.gender == *ga) group_a.push_back(&record);
      else if (*record.gender == *gb) group_b.push_back(&record);
    }
  } else {
    if (groups) {
      table.group_a = groups->first;
      table.group_b = groups->second;
    } else {
      // The two most frequent countries; ties break alphabetically.
      std::map<std::string, std::size_t> counts;
      for (const auto& record : records) {
        if (record.country) ++counts[*record.country];
      }
      if (counts.size() < 2) throw DataError("group diff: need at least two countries");
      std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      table.group_a = ranked[0].first;
      table.group_b = ranked[1].first;
    }
    for (const auto& record : records) {
      if (!record.country) continue;
      if (*record.country == table.group_a) group_a.push_back(&record);
      else if (*record.country == table.group_b) group_b.push_back(&record);
    }
  }
  if (group_a.empty() || group_b.empty()) {
    throw DataError("group diff: a group has no raters (" + table.group_a + " vs " +
                    table.group_b + ")");
  }

  std::vector<std::string> word_list;
  if (words) {
    word_list = *words;
  } else {
    std::set<std::string> vocab;
    for (const auto* record : group_a) {
      for (const auto& [word, rating] : record->ratings) vocab.insert(word);
    }
    for (const auto* record : group_b) {
      for (const auto& [word, rating] : record->ratings) vocab.insert(word);
    }
    word_list.assign(vocab.begin(), vocab.end());
  }

  std::vector<double> p_values;
  for (const auto& word : word_list) {
    std::vector<double> a;
    std::vector<double> b;
    for (const auto* record : group_a) {
      const auto it = record->ratings.find(word);
      if (it != record->ratings.end()) a.push_back(double(it->second));
    }
    for (const auto* record : group_b) {
      const auto it = record->ratings.find(word);
      if (it != record->ratings.end()) b.push_back(double(it->second));
    }
    if (a.size() < 2 || b.size() < 2) {
      ++table.words_skipped;
      continue;
    }
    TTestResult t;
    try {
      t = two_sample_t_test(a, b);
    } catch (const NumericalError&) {
      ++table.words_skipped;  // both groups constant on this word
      continue;
    }
    GroupDiffTable::Row row;
    row.word = word;
    row.mean_a = t.mean_a;
    row.mean_b = t.mean_b;
    row.t = t.t;
    row.p_value = t.p_value;
    row.direction = t.mean_a > t.mean_b   ? table.group_a
                    : t.mean_b > t.mean_a ? table.group_b
                                          : "equal";
    table.rows.push_back(std::move(row));
    p_values.push_back(t.p_value);
  }

  const std::vector<double> adjusted = bonferroni(p_values);
  for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].p_adjusted = adjusted[i];
  table.tested = table.rows.size();

  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    if (a.p_adjusted != b.p_adjusted) return a.p_adjusted < b.p_adjusted;
    return a.word < b.word;
  });
  return table;
}

}  // namespace humorkit
