#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace humorkit {

enum class Gender { female, male, other_unknown };

std::string_view gender_name(Gender g);
std::optional<Gender> gender_from_name(std::string_view name);

// The six binary humor features annotated per word.
enum class Feature : std::size_t {
  sound = 0,
  juxtaposition = 1,
  sexual = 2,
  scatological = 3,
  insulting = 4,
  colloquial = 5,
};

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "sound", "juxtaposition", "sexual", "scatological", "insulting", "colloquial"};

std::optional<Feature> feature_from_name(std::string_view name);

// Mean humor ratings on a 1..5 scale, optionally broken out by rater group.
struct HumorRatings {
  struct Entry {
    double mean = 0.0;
    std::optional<double> mean_female;
    std::optional<double> mean_male;
    std::optional<double> mean_young;
    std::optional<double> mean_old;
  };

  std::vector<std::string> words;  // file order
  std::unordered_map<std::string, Entry> entries;

  std::size_t size() const { return words.size(); }
};

HumorRatings load_humor_ratings(const std::filesystem::path& path);

// One participant's forced-choice outcome: per-word selection counts 0..3
// plus optional demographics.
struct RaterRecord {
  std::string rater_id;
  std::optional<Gender> gender;
  std::optional<double> age;
  std::optional<std::string> country;
  std::map<std::string, int> ratings;  // word -> 0..3
  bool complete = false;               // standard 216-word composition

  std::vector<std::string> positive_words() const;  // rating >= 1, word order
  std::vector<std::string> words_with_rating(int rating) const;
  std::optional<std::string> top_word() const;  // the unique rating-3 word, if any
};

// A full forced-choice session over 216 words leaves exactly this shape:
// 180 words never picked, 30 picked once, 5 picked twice, 1 picked three times.
bool has_standard_composition(const RaterRecord& record);

struct RaterLoadReport {
  std::size_t duplicate_pairs = 0;    // same (rater, word) seen more than once
  std::size_t incomplete_raters = 0;  // raters without the standard composition
};

std::vector<RaterRecord> load_rater_records(const std::filesystem::path& path,
                                            RaterLoadReport* report = nullptr);

std::vector<RaterRecord> complete_records(const std::vector<RaterRecord>& records);

// Mean rating per word across a set of raters (words missing from a rater
// contribute nothing for that rater).
std::map<std::string, double> word_mean_ratings(const std::vector<RaterRecord>& records);

void write_rater_records_csv(const std::vector<RaterRecord>& records,
                             const std::filesystem::path& path);

// Per-word fraction of annotators voting yes for each feature, in [0, 1].
struct FeatureAnnotations {
  std::vector<std::string> words;  // file order
  std::unordered_map<std::string, std::array<double, kFeatureCount>> scores;
  std::unordered_map<std::string, std::size_t> annotator_counts;

  std::size_t size() const { return words.size(); }
};

FeatureAnnotations load_feature_annotations(const std::filesystem::path& path);

// A candidate vocabulary: lowercase single words or two-word phrases joined
// by a single underscore.
struct WordList {
  std::vector<std::string> words;  // file order, deduplicated
  std::vector<std::string> charset_violations;
  std::size_t duplicates_dropped = 0;

  std::size_t size() const { return words.size(); }
};

bool valid_token_charset(std::string_view token);

WordList load_word_list(const std::filesystem::path& path);

}  // namespace humorkit
