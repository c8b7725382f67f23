#include "humorkit/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "humorkit/csv.hpp"
#include "humorkit/errors.hpp"

namespace humorkit {
namespace {

std::string lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool field_empty(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "n/a" || s == "NULL" || s == "null" ||
         s == "none" || s == "None" || s == "-";
}

}  // namespace

std::string_view gender_name(Gender g) {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    case Gender::other_unknown: return "other";
  }
  return "other";
}

std::optional<Gender> gender_from_name(std::string_view name) {
  const std::string s = lower_copy(name);
  if (s == "f" || s == "female" || s == "woman" || s == "w") return Gender::female;
  if (s == "m" || s == "male" || s == "man") return Gender::male;
  if (s == "o" || s == "other" || s == "nonbinary" || s == "non-binary" || s == "unknown" ||
      s == "prefer_not_to_say" || s == "na") {
    return Gender::other_unknown;
  }
  return std::nullopt;
}

std::optional<Feature> feature_from_name(std::string_view name) {
  const std::string s = lower_copy(name);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (s == kFeatureNames[i]) return static_cast<Feature>(i);
  }
  // Accept the adjectival spellings some annotation exports use.
  if (s == "juxtapose" || s == "juxtaposed") return Feature::juxtaposition;
  if (s == "insult") return Feature::insulting;
  if (s == "colloquialism") return Feature::colloquial;
  return std::nullopt;
}

HumorRatings load_humor_ratings(const std::filesystem::path& path) {
  const Table table = read_delimited(path);
  const ColumnMap no_aliases;

  const auto word_col = find_column(table, "word", no_aliases, true);
  const auto mean_col = find_column(table, "mean", no_aliases, true);
  const auto f_col = find_column(table, "mean_female", no_aliases, false);
  const auto m_col = find_column(table, "mean_male", no_aliases, false);
  const auto young_col = find_column(table, "mean_young", no_aliases, false);
  const auto old_col = find_column(table, "mean_old", no_aliases, false);

  HumorRatings out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string context = path.string() + " row " + std::to_string(r + 2);
    const std::string& word = row[*word_col];
    if (out.entries.contains(word)) throw DataError(context + ": duplicate word '" + word + "'");

    HumorRatings::Entry entry;
    entry.mean = parse_double(row[*mean_col], context + " mean");
    if (entry.mean < 1.0 || entry.mean > 5.0) {
      throw DataError(context + ": mean rating " + row[*mean_col] + " outside [1, 5]");
    }
    const auto optional_mean = [&](std::optional<std::size_t> col,
                                   const char* label) -> std::optional<double> {
      if (!col || field_empty(row[*col])) return std::nullopt;
      const double v = parse_double(row[*col], context + " " + label);
      if (v < 1.0 || v > 5.0) {
        throw DataError(context + ": " + label + " " + row[*col] + " outside [1, 5]");
      }
      return v;
    };
    entry.mean_female = optional_mean(f_col, "mean_female");
    entry.mean_male = optional_mean(m_col, "mean_male");
    entry.mean_young = optional_mean(young_col, "mean_young");
    entry.mean_old = optional_mean(old_col, "mean_old");

    out.words.push_back(word);
    out.entries.emplace(word, entry);
  }
  if (out.words.empty()) throw DataError("no rating rows in " + path.string());
  return out;
}

std::vector<std::string> RaterRecord::positive_words() const {
  std::vector<std::string> out;
  for (const auto& [word, rating] : ratings) {
    if (rating >= 1) out.push_back(word);
  }
  return out;
}

std::vector<std::string> RaterRecord::words_with_rating(int rating) const {
  std::vector<std::string> out;
  for (const auto& [word, r] : ratings) {
    if (r == rating) out.push_back(word);
  }
  return out;
}

std::optional<std::string> RaterRecord::top_word() const {
  std::optional<std::string> found;
  for (const auto& [word, r] : ratings) {
    if (r == 3) {
      if (found) return std::nullopt;  // not unique
      found = word;
    }
  }
  return found;
}

bool has_standard_composition(const RaterRecord& record) {
  if (record.ratings.size() != 216) return false;
  std::array<std::size_t, 4> counts{};
  for (const auto& [word, rating] : record.ratings) {
    if (rating < 0 || rating > 3) return false;
    ++counts[static_cast<std::size_t>(rating)];
  }
  return counts == std::array<std::size_t, 4>{180, 30, 5, 1};
}

std::vector<RaterRecord> load_rater_records(const std::filesystem::path& path,
                                            RaterLoadReport* report) {
  const Table table = read_delimited(path);
  const ColumnMap no_aliases;

  const auto rater_col = find_column(table, "rater_id", no_aliases, true);
  const auto word_col = find_column(table, "word", no_aliases, true);
  const auto rating_col = find_column(table, "rating", no_aliases, true);
  const auto gender_col = find_column(table, "gender", no_aliases, false);
  const auto age_col = find_column(table, "age", no_aliases, false);
  const auto country_col = find_column(table, "country", no_aliases, false);

  std::vector<RaterRecord> records;
  std::unordered_map<std::string, std::size_t> by_id;
  RaterLoadReport local_report;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string context = path.string() + " row " + std::to_string(r + 2);

    const std::string& rater_id = row[*rater_col];
    if (rater_id.empty()) throw DataError(context + ": empty rater_id");
    auto [it, inserted] = by_id.emplace(rater_id, records.size());
    if (inserted) {
      records.emplace_back();
      records.back().rater_id = rater_id;
    }
    RaterRecord& record = records[it->second];

    const long long rating = parse_int(row[*rating_col], context + " rating");
    if (rating < 0 || rating > 3) {
      throw DataError(context + ": rating " + std::to_string(rating) + " outside 0..3");
    }
    const std::string& word = row[*word_col];
    if (word.empty()) throw DataError(context + ": empty word");
    auto [rit, fresh] = record.ratings.emplace(word, static_cast<int>(rating));
    if (!fresh) {
      ++local_report.duplicate_pairs;
      rit->second = std::max(rit->second, static_cast<int>(rating));
    }

    if (gender_col && !field_empty(row[*gender_col])) {
      const auto g = gender_from_name(row[*gender_col]);
      if (!g) throw DataError(context + ": unrecognized gender '" + row[*gender_col] + "'");
      if (record.gender && *record.gender != *g) {
        throw DataError(context + ": conflicting gender for rater " + rater_id);
      }
      record.gender = g;
    }
    if (age_col && !field_empty(row[*age_col])) {
      const double age = parse_double(row[*age_col], context + " age");
      if (age <= 0 || age > 130) throw DataError(context + ": implausible age " + row[*age_col]);
      if (record.age && *record.age != age) {
        throw DataError(context + ": conflicting age for rater " + rater_id);
      }
      record.age = age;
    }
    if (country_col && !field_empty(row[*country_col])) {
      const std::string& country = row[*country_col];
      if (record.country && *record.country != country) {
        throw DataError(context + ": conflicting country for rater " + rater_id);
      }
      record.country = country;
    }
  }

  if (records.empty()) throw DataError("no rating rows in " + path.string());
  for (auto& record : records) {
    record.complete = has_standard_composition(record);
    if (!record.complete) ++local_report.incomplete_raters;
  }
  if (report) *report = local_report;
  return records;
}

std::vector<RaterRecord> complete_records(const std::vector<RaterRecord>& records) {
  std::vector<RaterRecord> out;
  for (const auto& record : records) {
    if (record.complete) out.push_back(record);
  }
  return out;
}

std::map<std::string, double> word_mean_ratings(const std::vector<RaterRecord>& records) {
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& record : records) {
    for (const auto& [word, rating] : record.ratings) {
      auto& slot = sums[word];
      slot.first += rating;
      slot.second += 1;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [word, slot] : sums) out.emplace(word, slot.first / double(slot.second));
  return out;
}

void write_rater_records_csv(const std::vector<RaterRecord>& records,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "rater_id,word,rating,gender,age,country\n";
  for (const auto& record : records) {
    const std::string gender = record.gender ? std::string(gender_name(*record.gender)) : "";
    const std::string age = record.age ? format_double(*record.age) : "";
    const std::string country = record.country ? *record.country : "";
    for (const auto& [word, rating] : record.ratings) {
      out << csv_escape(record.rater_id) << ',' << csv_escape(word) << ',' << rating << ','
          << gender << ',' << age << ',' << csv_escape(country) << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureAnnotations load_feature_annotations(const std::filesystem::path& path) {
  const Table table = read_delimited(path);
  const ColumnMap no_aliases;
  FeatureAnnotations out;

  const auto word_col = find_column(table, "word", no_aliases, true);
  const auto feature_col = find_column(table, "feature", no_aliases, false);

  if (feature_col) {
    // Long format: word,feature,vote — one annotator vote per row.
    const auto vote_col = find_column(table, "vote", no_aliases, true);
    std::unordered_map<std::string, std::array<std::pair<double, std::size_t>, kFeatureCount>>
        tallies;
    std::unordered_map<std::string, std::set<std::string>> annotators;
    const auto annotator_col = find_column(table, "annotator_id", no_aliases, false);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const std::string context = path.string() + " row " + std::to_string(r + 2);
      const std::string& word = row[*word_col];
      const auto feature = feature_from_name(row[*feature_col]);
      if (!feature) throw DataError(context + ": unknown feature '" + row[*feature_col] + "'");
      const double vote = parse_double(row[*vote_col], context + " vote");
      if (vote < 0.0 || vote > 1.0) {
        throw DataError(context + ": vote " + row[*vote_col] + " outside [0, 1]");
      }
      if (!tallies.contains(word)) out.words.push_back(word);
      auto& slot = tallies[word][static_cast<std::size_t>(*feature)];
      slot.first += vote;
      slot.second += 1;
      if (annotator_col) annotators[word].insert(row[*annotator_col]);
    }
    for (const auto& word : out.words) {
      std::array<double, kFeatureCount> scores{};
      std::size_t max_votes = 0;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto& slot = tallies[word][f];
        scores[f] = slot.second == 0 ? 0.0 : slot.first / double(slot.second);
        max_votes = std::max(max_votes, slot.second);
      }
      out.scores.emplace(word, scores);
      out.annotator_counts.emplace(
          word, annotator_col ? annotators[word].size() : max_votes);
    }
  } else {
    // Wide format: word plus one column per feature, values already in [0, 1].
    std::array<std::size_t, kFeatureCount> cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto col = find_column(table, kFeatureNames[f], no_aliases, true);
      cols[f] = *col;
    }
    const auto count_col = find_column(table, "annotators", no_aliases, false);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const std::string context = path.string() + " row " + std::to_string(r + 2);
      const std::string& word = row[*word_col];
      if (out.scores.contains(word)) throw DataError(context + ": duplicate word '" + word + "'");
      std::array<double, kFeatureCount> scores{};
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        scores[f] = parse_double(row[cols[f]], context + " " + std::string(kFeatureNames[f]));
        if (scores[f] < 0.0 || scores[f] > 1.0) {
          throw DataError(context + ": score " + row[cols[f]] + " outside [0, 1]");
        }
      }
      std::size_t annotators = 1;
      if (count_col && !field_empty(row[*count_col])) {
        const long long n = parse_int(row[*count_col], context + " annotators");
        if (n < 1) throw DataError(context + ": annotator count must be positive");
        annotators = static_cast<std::size_t>(n);
      }
      out.words.push_back(word);
      out.scores.emplace(word, scores);
      out.annotator_counts.emplace(word, annotators);
    }
  }

  if (out.words.empty()) throw DataError("no annotation rows in " + path.string());
  return out;
}

bool valid_token_charset(std::string_view token) {
  if (token.empty()) return false;
  std::size_t underscores = 0;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const char c = token[i];
    if (c == '_') {
      ++underscores;
      if (underscores > 1) return false;
      if (i == 0 || i + 1 == token.size()) return false;
    } else if (c < 'a' || c > 'z') {
      return false;
    }
  }
  return true;
}

WordList load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word list: " + path.string());

  WordList out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen.insert(line).second) {
      ++out.duplicates_dropped;
      continue;
    }
    if (!valid_token_charset(line)) out.charset_violations.push_back(line);
    out.words.push_back(line);
  }
  if (out.words.empty()) throw DataError("empty word list: " + path.string());
  return out;
}

}  // namespace humorkit
