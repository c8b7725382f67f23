#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "humorkit/datasets.hpp"
#include "humorkit/numstats.hpp"

namespace humorkit {

struct ClusterModel {
  int k = 0;
  Eigen::MatrixXd centroids;  // k x dim
  std::vector<int> assignments;
  double inertia = 0.0;
  int iterations = 0;
  uint64_t seed = 0;
  std::vector<double> inertia_trace;  // inertia after each update of the best restart
};

struct KmeansOptions {
  int max_iter = 300;
  double tol = 1e-4;  // Frobenius norm of the centroid shift
  int n_init = 10;
  unsigned threads = 1;
};

// Lloyd's algorithm with distance-squared seeding, restarted n_init times;
// the restart with the lowest inertia wins (earlier restart on exact ties).
ClusterModel kmeans_pp(const Eigen::MatrixXd& points, int k, uint64_t seed,
                       const KmeansOptions& options = {});

struct ElbowCurve {
  std::vector<std::pair<int, double>> points;  // (k, inertia)
  int suggested_k = 0;
  bool degenerate_range = false;  // too few candidates for a curvature pick
};

// Inertia across a K range; the suggestion maximizes the second difference
// of the curve (the sharpest bend).
ElbowCurve elbow_curve(const Eigen::MatrixXd& points, int k_min, int k_max, uint64_t seed,
                       const KmeansOptions& options = {});

// Per-cluster word preference relative to the whole population: for each
// word, the fraction of the cluster's raters who picked it at least once
// minus the same fraction over everyone.
struct ClusterWordStats {
  std::vector<std::string> words;  // sorted union of rated words
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::vector<double>> relative_mean;  // [cluster][word index]
  std::vector<double> overall_fraction;            // [word index]
  std::vector<int> empty_clusters;

  std::vector<std::pair<std::string, double>> top_words(int cluster, std::size_t count,
                                                        bool single_words_only = false) const;
};

ClusterWordStats relative_means(const std::vector<RaterRecord>& records,
                                const std::vector<int>& assignments, int k);

enum class ProfileAggregation { pooled_events, per_rater_mean };

// Feature affinity per cluster: the mean annotation score of the cluster's
// picked words, normalized by the population-wide mean so 1.0 is neutral.
struct FeatureProfile {
  int k = 0;
  std::vector<std::array<double, kFeatureCount>> ratio;  // [cluster][feature]
  std::array<double, kFeatureCount> overall_mean{};
  std::size_t uncovered_words = 0;  // picked words with no annotation
  ProfileAggregation aggregation = ProfileAggregation::pooled_events;
};

FeatureProfile cluster_feature_profile(const std::vector<RaterRecord>& records,
                                       const std::vector<int>& assignments, int k,
                                       const FeatureAnnotations& annotations,
                                       ProfileAggregation aggregation =
                                           ProfileAggregation::pooled_events);

// Demographic makeup per cluster with permutation tests against the pooled
// population (female fraction over known-gender raters, mean age over
// known-age raters).
struct DemographicsReport {
  struct ClusterRow {
    int cluster = 0;
    std::size_t size = 0;
    std::size_t known_gender = 0;
    std::size_t known_age = 0;
    double female_fraction = 0.0;
    double mean_age = 0.0;
    PermutationTestResult female_test;
    PermutationTestResult age_test;
    bool female_outside_null95 = false;
    bool age_outside_null95 = false;
  };

  std::vector<ClusterRow> rows;
  double overall_female_fraction = 0.0;
  double overall_mean_age = 0.0;
  std::size_t shuffles = 0;
  uint64_t seed = 0;
};

DemographicsReport cluster_demographics(const std::vector<RaterRecord>& records,
                                        const std::vector<int>& assignments, int k,
                                        std::size_t shuffles, uint64_t seed,
                                        unsigned threads = 1);

enum class GroupAttribute { gender, country };

// Per-word two-group rating comparison (Welch test, Bonferroni over the
// words actually tested).
struct GroupDiffTable {
  struct Row {
    std::string word;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double t = 0.0;
    double p_value = 0.0;
    double p_adjusted = 0.0;
    std::string direction;  // name of the higher-mean group
  };

  std::string group_a;
  std::string group_b;
  std::vector<Row> rows;  // sorted by adjusted p, then word
  std::size_t words_skipped = 0;
  std::size_t tested = 0;
};

GroupDiffTable group_rating_diff(const std::vector<RaterRecord>& records, GroupAttribute attribute,
                                 const std::optional<std::pair<std::string, std::string>>& groups =
                                     std::nullopt,
                                 const std::vector<std::string>* words = nullptr);

}  // namespace humorkit
