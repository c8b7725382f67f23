// humorkit command-line toolkit: probing, scoring, clustering, audience
// matching, feature analysis, group comparisons, and protocol simulation on
// word-embedding humor data.  Every report embeds the run configuration, the
// master seed, and the software version, and identical configurations produce
// byte-identical output regardless of --threads.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "json.hpp"

#include "humorkit/clustering.hpp"
#include "humorkit/csv.hpp"
#include "humorkit/datasets.hpp"
#include "humorkit/embedding.hpp"
#include "humorkit/errors.hpp"
#include "humorkit/features.hpp"
#include "humorkit/numstats.hpp"
#include "humorkit/personalize.hpp"
#include "humorkit/protocol_sim.hpp"
#include "humorkit/rng.hpp"
#include "humorkit/version.hpp"

namespace {

using json = nlohmann::ordered_json;
using humorkit::DataError;
using humorkit::NumericalError;

// A request that cannot be fulfilled as stated (missing required flag,
// contradictory combination).  Maps to exit code 1, like a parse error.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;

  // Inputs.
  std::string embedding_path;
  std::string embedding_format = "text";
  std::string eh_path;
  std::string raters_path;
  std::string annotations_path;
  std::string wordlist_path;

  // Shared knobs.
  std::uint64_t seed = 42;
  int folds = 10;
  int reps = 100;
  double ridge = -1.0;  // negative = pick automatically from the data shape
  int k = 0;
  std::string k_range;  // "A..B"
  int shuffles = 10000;
  std::string variant = "normal";
  std::string out_path;  // empty = stdout
  std::string format = "json";
  unsigned threads = 1;

  // score
  std::string probe_path;
  std::string save_probe_path;
  std::vector<std::string> words;
  std::string words_file;

  // cluster
  int top_words = 10;
  bool per_rater_profile = false;

  // kya
  bool unnormalized_r = false;

  // group-diff
  std::string attribute = "gender";
  std::string groups;  // "A,B"

  // simulate
  std::size_t synthetic_words = 0;
  std::size_t raters_count = 50;
  std::size_t topics = 0;
  double noise = 0.0;
  double jitter = 0.5;
  double gender_skew = 0.0;
  double age_skew = 0.0;
  std::vector<double> position_bias;  // empty or exactly 6 values
  std::size_t stage3_words = 216;
  std::size_t stage1_min_views = 3;
  std::size_t stage2_min_views = 15;
  double none_top_fraction = 0.25;
  std::size_t stem_prefix = 4;
  std::string records_path;
};

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

std::string path_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

humorkit::EmbeddingMatrix load_embedding(const RunConfig& cfg) {
  if (cfg.embedding_path.empty()) throw UsageError("--embedding is required for this command");
  if (cfg.embedding_format == "text") return humorkit::load_text_embedding(cfg.embedding_path);
  return humorkit::load_word2vec_binary(cfg.embedding_path);
}

std::vector<humorkit::RaterRecord> load_raters(const RunConfig& cfg) {
  if (cfg.raters_path.empty()) throw UsageError("--raters is required for this command");
  return humorkit::load_rater_records(cfg.raters_path);
}

std::pair<int, int> parse_k_range(const std::string& text) {
  const auto pos = text.find("..");
  if (pos == std::string::npos || pos == 0 || pos + 2 >= text.size()) {
    throw UsageError("--k-range must look like A..B, got '" + text + "'");
  }
  int lo = 0;
  int hi = 0;
  try {
    lo = std::stoi(text.substr(0, pos));
    hi = std::stoi(text.substr(pos + 2));
  } catch (const std::exception&) {
    throw UsageError("--k-range must hold two integers, got '" + text + "'");
  }
  if (lo < 1 || hi < lo) throw UsageError("--k-range needs 1 <= A <= B, got '" + text + "'");
  return {lo, hi};
}

humorkit::KyaVariant parse_variant(const std::string& name) {
  if (name == "easy") return humorkit::KyaVariant::easy;
  if (name == "normal") return humorkit::KyaVariant::normal;
  if (name == "hard") return humorkit::KyaVariant::hard;
  throw UsageError("--variant must be easy, normal, or hard");
}

std::vector<std::string> read_words_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open words file: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t");
    std::string token = line.substr(start, end - start + 1);
    if (token.empty() || token[0] == '#') continue;
    words.push_back(std::move(token));
  }
  return words;
}

// Lowercase letter-only tokens ("waa", "wab", ...) so synthetic word lists
// pass the same charset rules as loaded ones.
std::vector<std::string> synthetic_word_list(std::size_t count) {
  std::vector<std::string> words(count);
  std::size_t width = 1;
  std::size_t span = 26;
  while (span < count) {
    ++width;
    span *= 26;
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::string suffix(width, 'a');
    std::size_t v = i;
    for (std::size_t j = width; j-- > 0;) {
      suffix[j] = static_cast<char>('a' + v % 26);
      v /= 26;
    }
    words[i] = "w" + suffix;
  }
  return words;
}

bool is_power_of_six(std::size_t n) {
  if (n == 0) return false;
  while (n % 6 == 0) n /= 6;
  return n == 1;
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

json config_echo(const RunConfig& cfg) {
  json c;
  c["subcommand"] = cfg.subcommand;
  if (!cfg.embedding_path.empty()) {
    c["embedding"] = cfg.embedding_path;
    c["embedding_format"] = cfg.embedding_format;
  }
  if (!cfg.eh_path.empty()) c["eh"] = cfg.eh_path;
  if (!cfg.raters_path.empty()) c["raters"] = cfg.raters_path;
  if (!cfg.annotations_path.empty()) c["annotations"] = cfg.annotations_path;
  if (!cfg.wordlist_path.empty()) c["wordlist"] = cfg.wordlist_path;
  c["seed"] = cfg.seed;
  c["format"] = cfg.format;

  const std::string& sub = cfg.subcommand;
  if (sub == "humor-direction" || sub == "features") {
    c["folds"] = cfg.folds;
    c["reps"] = cfg.reps;
  }
  if (sub == "humor-direction" || sub == "score") {
    if (cfg.ridge >= 0.0) {
      c["ridge"] = cfg.ridge;
    } else {
      c["ridge"] = "auto";
    }
  }
  if (sub == "score") {
    if (!cfg.probe_path.empty()) c["probe"] = cfg.probe_path;
    if (!cfg.words_file.empty()) c["words_file"] = cfg.words_file;
    if (!cfg.words.empty()) c["words"] = cfg.words;
  }
  if ((sub == "score" || sub == "humor-direction") && !cfg.save_probe_path.empty()) {
    c["save_probe"] = cfg.save_probe_path;
  }
  if (sub == "cluster") {
    if (!cfg.k_range.empty()) {
      c["k_range"] = cfg.k_range;
    } else {
      c["k"] = cfg.k;
    }
    c["shuffles"] = cfg.shuffles;
    c["top_words"] = cfg.top_words;
    if (cfg.per_rater_profile) c["per_rater_profile"] = true;
  }
  if (sub == "kya") {
    c["variant"] = cfg.variant;
    if (cfg.unnormalized_r) c["unnormalized_r"] = true;
  }
  if (sub == "group-diff") {
    c["attribute"] = cfg.attribute;
    if (!cfg.groups.empty()) c["groups"] = cfg.groups;
  }
  if (sub == "simulate") {
    if (cfg.synthetic_words > 0) c["synthetic_words"] = cfg.synthetic_words;
    c["raters_count"] = cfg.raters_count;
    c["topics"] = cfg.topics;
    c["noise"] = cfg.noise;
    c["jitter"] = cfg.jitter;
    c["gender_skew"] = cfg.gender_skew;
    c["age_skew"] = cfg.age_skew;
    if (!cfg.position_bias.empty()) c["position_bias"] = cfg.position_bias;
    c["stage3_words"] = cfg.stage3_words;
    c["stage1_min_views"] = cfg.stage1_min_views;
    c["stage2_min_views"] = cfg.stage2_min_views;
    c["none_top_fraction"] = cfg.none_top_fraction;
    c["stem_prefix"] = cfg.stem_prefix;
    if (!cfg.records_path.empty()) c["records"] = cfg.records_path;
  }
  return c;
}

json report_envelope(const RunConfig& cfg) {
  json report;
  report["command"] = cfg.subcommand;
  report["version"] = std::string(humorkit::kVersion);
  report["config"] = config_echo(cfg);
  return report;
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out_path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + cfg.out_path);
  out << text;
  if (!out) throw DataError("failed writing output file: " + cfg.out_path);
}

std::string csv_preamble(const RunConfig& cfg) {
  std::string text = "# humorkit ";
  text += humorkit::kVersion;
  text += "\n# config=";
  text += config_echo(cfg).dump();
  text += "\n";
  return text;
}

// Emit either the JSON report or the CSV table, both carrying the config.
void emit_report(const RunConfig& cfg, const json& report, const std::string& csv_header,
                 const std::vector<std::string>& csv_rows) {
  if (cfg.format == "json") {
    write_output(cfg, report.dump(2) + "\n");
    return;
  }
  std::string text = csv_preamble(cfg);
  text += csv_header;
  text += "\n";
  for (const std::string& row : csv_rows) {
    text += row;
    text += "\n";
  }
  write_output(cfg, text);
}

std::string fmt(double value) { return humorkit::format_double(value); }

// ---------------------------------------------------------------------------
// Probe persistence (score/humor-direction share the format)
// ---------------------------------------------------------------------------

json probe_to_json(const humorkit::LinearProbe& probe, const std::string& embedding_name) {
  json j;
  j["kind"] = "humorkit-probe";
  j["version"] = std::string(humorkit::kVersion);
  j["embedding_name"] = embedding_name;
  j["dim"] = probe.weights.size();
  j["intercept"] = probe.intercept;
  j["ridge"] = probe.ridge;
  j["n_samples"] = probe.n_samples;
  j["seed"] = probe.seed;
  std::vector<double> weights(probe.weights.data(), probe.weights.data() + probe.weights.size());
  j["weights"] = weights;
  return j;
}

void save_probe(const humorkit::LinearProbe& probe, const std::string& path,
                const std::string& embedding_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open probe file for writing: " + path);
  out << probe_to_json(probe, embedding_name).dump(2) << "\n";
  if (!out) throw DataError("failed writing probe file: " + path);
}

humorkit::LinearProbe load_probe(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open probe file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("probe file is not valid JSON: " + path + " (" + e.what() + ")");
  }
  if (!j.contains("kind") || j["kind"] != "humorkit-probe") {
    throw DataError("probe file missing the humorkit-probe marker: " + path);
  }
  humorkit::LinearProbe probe;
  try {
    const auto weights = j.at("weights").get<std::vector<double>>();
    probe.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                      static_cast<Eigen::Index>(weights.size()));
    probe.intercept = j.at("intercept").get<double>();
    probe.ridge = j.at("ridge").get<double>();
    probe.n_samples = j.at("n_samples").get<std::size_t>();
    probe.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("dim").get<Eigen::Index>() != probe.weights.size()) {
      throw DataError("probe file dim disagrees with its weight count: " + path);
    }
  } catch (const json::exception& e) {
    throw DataError("probe file missing fields: " + path + " (" + e.what() + ")");
  }
  return probe;
}

// ---------------------------------------------------------------------------
// Shared data assembly
// ---------------------------------------------------------------------------

struct ProbeData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> used;
  std::vector<std::string> missing;
};

ProbeData assemble_probe_data(const humorkit::HumorRatings& ratings,
                              const humorkit::EmbeddingMatrix& emb) {
  ProbeData data;
  for (const std::string& word : ratings.words) {
    if (humorkit::lookup(emb, word)) {
      data.used.push_back(word);
    } else {
      data.missing.push_back(word);
    }
  }
  data.X.resize(static_cast<Eigen::Index>(data.used.size()), static_cast<Eigen::Index>(emb.dim));
  data.y.resize(static_cast<Eigen::Index>(data.used.size()));
  for (std::size_t i = 0; i < data.used.size(); ++i) {
    const auto row = humorkit::lookup(emb, data.used[i]);
    for (std::size_t j = 0; j < emb.dim; ++j) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>((*row)[j]);
    }
    data.y(static_cast<Eigen::Index>(i)) = ratings.entries.at(data.used[i]).mean;
  }
  return data;
}

double effective_ridge(const RunConfig& cfg, std::size_t n, std::size_t d) {
  return cfg.ridge >= 0.0 ? cfg.ridge : humorkit::default_ridge(n, d);
}

struct ProfileSet {
  Eigen::MatrixXd points;                        // one row per usable rater
  std::vector<std::size_t> record_index;         // row -> index into records
  std::vector<std::string> skipped;              // raters without a usable vector
};

ProfileSet assemble_profiles(const std::vector<humorkit::RaterRecord>& records,
                             const humorkit::EmbeddingMatrix& emb) {
  ProfileSet set;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto profile = humorkit::sense_of_humor_vector(records[i], emb);
    if (!profile.valid) {
      set.skipped.push_back(records[i].rater_id);
      continue;
    }
    rows.push_back(std::move(profile.vector));
    set.record_index.push_back(i);
  }
  if (!rows.empty()) {
    set.points.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      set.points.row(static_cast<Eigen::Index>(i)) = rows[i];
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// humor-direction
// ---------------------------------------------------------------------------

int cmd_humor_direction(const RunConfig& cfg) {
  if (cfg.eh_path.empty()) throw UsageError("--eh is required for humor-direction");
  const auto emb = load_embedding(cfg);
  const auto ratings = humorkit::load_humor_ratings(cfg.eh_path);
  const ProbeData data = assemble_probe_data(ratings, emb);
  if (data.used.empty()) throw DataError("no rated words found in the embedding vocabulary");

  const double ridge = effective_ridge(cfg, data.used.size(), emb.dim);
  auto probe = humorkit::fit_least_squares(data.X, data.y, ridge);
  probe.seed = cfg.seed;
  const Eigen::VectorXd fitted = probe.predict(data.X);
  const std::vector<double> pred(fitted.data(), fitted.data() + fitted.size());
  const std::vector<double> actual(data.y.data(), data.y.data() + data.y.size());
  const double full_fit_r = humorkit::pearson(pred, actual);

  const auto cv = humorkit::repeated_cv_correlation(data.X, data.y, cfg.folds, cfg.reps, ridge,
                                                    cfg.seed, cfg.threads);

  if (!cfg.save_probe_path.empty()) {
    save_probe(probe, cfg.save_probe_path, path_stem(cfg.embedding_path));
  }

  json report = report_envelope(cfg);
  report["embedding"] = {{"name", path_stem(cfg.embedding_path)},
                         {"tokens", emb.tokens.size()},
                         {"dim", emb.dim}};
  report["words"] = {{"rated", ratings.size()},
                     {"used", data.used.size()},
                     {"missing", data.missing.size()},
                     {"missing_words", data.missing}};
  report["ridge_used"] = ridge;
  report["full_fit_r"] = full_fit_r;
  report["cv"] = {{"mean_r", cv.mean_r},
                  {"ci95_halfwidth", cv.ci95_halfwidth},
                  {"folds", cv.folds},
                  {"repetitions", cv.repetitions},
                  {"seed", cv.seed},
                  {"degenerate_ci", cv.degenerate_ci},
                  {"per_repetition_r", cv.per_repetition_r}};

  std::vector<std::string> rows;
  rows.reserve(cv.per_repetition_r.size());
  for (std::size_t i = 0; i < cv.per_repetition_r.size(); ++i) {
    rows.push_back(std::to_string(i + 1) + "," + fmt(cv.per_repetition_r[i]));
  }
  std::string header = "repetition,r";
  if (cfg.format == "csv") {
    std::string summary = "# full_fit_r=" + fmt(full_fit_r) + "\n# cv_mean_r=" + fmt(cv.mean_r) +
                          "\n# cv_ci95_halfwidth=" + fmt(cv.ci95_halfwidth) + "\n";
    header = summary + header;
  }
  emit_report(cfg, report, header, rows);
  return 0;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

int cmd_score(const RunConfig& cfg) {
  const auto emb = load_embedding(cfg);

  std::optional<humorkit::HumorRatings> ratings;
  if (!cfg.eh_path.empty()) ratings = humorkit::load_humor_ratings(cfg.eh_path);

  humorkit::LinearProbe probe;
  if (!cfg.probe_path.empty()) {
    probe = load_probe(cfg.probe_path);
    if (static_cast<std::size_t>(probe.weights.size()) != emb.dim) {
      throw DataError("probe dimension " + std::to_string(probe.weights.size()) +
                      " does not match embedding dimension " + std::to_string(emb.dim));
    }
  } else {
    if (!ratings) throw UsageError("score needs --probe or --eh to obtain a probe");
    const ProbeData data = assemble_probe_data(*ratings, emb);
    if (data.used.empty()) throw DataError("no rated words found in the embedding vocabulary");
    probe = humorkit::fit_least_squares(data.X, data.y,
                                        effective_ridge(cfg, data.used.size(), emb.dim));
    probe.seed = cfg.seed;
  }
  if (!cfg.save_probe_path.empty()) {
    save_probe(probe, cfg.save_probe_path, path_stem(cfg.embedding_path));
  }

  std::vector<std::string> words = cfg.words;
  if (!cfg.words_file.empty()) {
    const auto more = read_words_file(cfg.words_file);
    words.insert(words.end(), more.begin(), more.end());
  }
  if (words.empty() && ratings) words = ratings->words;
  if (words.empty()) {
    throw UsageError("score needs words: --words, --words-file, or --eh for its word list");
  }

  json rows_json = json::array();
  std::vector<std::string> rows_csv;
  std::size_t missing_count = 0;
  for (const std::string& word : words) {
    json row;
    row["word"] = word;
    const auto vec = humorkit::lookup(emb, word);
    std::string csv_row = humorkit::csv_escape(word) + ",";
    if (vec) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(emb.dim));
      for (std::size_t j = 0; j < emb.dim; ++j) {
        x(static_cast<Eigen::Index>(j)) = static_cast<double>((*vec)[j]);
      }
      const double prediction = probe.predict(x);
      row["prediction"] = prediction;
      row["missing"] = false;
      csv_row += fmt(prediction);
      csv_row += ",";
      if (ratings) {
        const auto it = ratings->entries.find(word);
        if (it != ratings->entries.end()) {
          row["actual"] = it->second.mean;
          csv_row += fmt(it->second.mean);
        }
      }
      csv_row += ",false";
    } else {
      ++missing_count;
      row["missing"] = true;
      csv_row += ",,true";
    }
    rows_json.push_back(std::move(row));
    rows_csv.push_back(std::move(csv_row));
  }

  json report = report_envelope(cfg);
  report["probe"] = {{"dim", probe.weights.size()},
                     {"ridge", probe.ridge},
                     {"n_samples", probe.n_samples},
                     {"intercept", probe.intercept}};
  report["words_scored"] = words.size() - missing_count;
  report["words_missing"] = missing_count;
  report["scores"] = std::move(rows_json);

  emit_report(cfg, report, "word,prediction,actual,missing", rows_csv);
  return 0;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

int cmd_cluster(const RunConfig& cfg) {
  if (cfg.k <= 0 && cfg.k_range.empty()) throw UsageError("cluster needs --k or --k-range");
  const auto emb = load_embedding(cfg);
  const auto records = load_raters(cfg);
  const ProfileSet profiles = assemble_profiles(records, emb);
  if (profiles.record_index.empty()) throw DataError("no raters with usable taste vectors");

  std::vector<humorkit::RaterRecord> used;
  used.reserve(profiles.record_index.size());
  for (const std::size_t idx : profiles.record_index) used.push_back(records[idx]);

  humorkit::KmeansOptions options;
  options.threads = cfg.threads;

  json report = report_envelope(cfg);
  report["embedding"] = {{"name", path_stem(cfg.embedding_path)},
                         {"tokens", emb.tokens.size()},
                         {"dim", emb.dim}};
  report["raters"] = {{"total", records.size()},
                      {"used", used.size()},
                      {"skipped", profiles.skipped.size()},
                      {"skipped_ids", profiles.skipped}};

  int k = cfg.k;
  if (!cfg.k_range.empty()) {
    const auto [lo, hi] = parse_k_range(cfg.k_range);
    const auto elbow = humorkit::elbow_curve(profiles.points, lo, hi, cfg.seed, options);
    json points = json::array();
    for (const auto& [kk, inertia] : elbow.points) points.push_back({{"k", kk}, {"inertia", inertia}});
    report["elbow"] = {{"points", std::move(points)},
                       {"suggested_k", elbow.suggested_k},
                       {"degenerate_range", elbow.degenerate_range}};
    k = elbow.suggested_k;
  }

  const auto model = humorkit::kmeans_pp(profiles.points, k, cfg.seed, options);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const int a : model.assignments) ++sizes[static_cast<std::size_t>(a)];
  report["model"] = {{"k", model.k},
                     {"inertia", model.inertia},
                     {"iterations", model.iterations},
                     {"seed", model.seed},
                     {"sizes", sizes}};

  const auto word_stats = humorkit::relative_means(used, model.assignments, k);

  std::optional<humorkit::FeatureProfile> feature_profile;
  if (!cfg.annotations_path.empty()) {
    const auto annotations = humorkit::load_feature_annotations(cfg.annotations_path);
    const auto aggregation = cfg.per_rater_profile ? humorkit::ProfileAggregation::per_rater_mean
                                                   : humorkit::ProfileAggregation::pooled_events;
    feature_profile =
        humorkit::cluster_feature_profile(used, model.assignments, k, annotations, aggregation);
    report["feature_profile_uncovered_words"] = feature_profile->uncovered_words;
  }

  std::optional<humorkit::DemographicsReport> demographics;
  if (cfg.shuffles > 0) {
    demographics = humorkit::cluster_demographics(used, model.assignments, k,
                                                  static_cast<std::size_t>(cfg.shuffles), cfg.seed,
                                                  cfg.threads);
    report["overall"] = {{"female_fraction", demographics->overall_female_fraction},
                         {"mean_age", demographics->overall_mean_age},
                         {"shuffles", demographics->shuffles}};
  }

  json clusters = json::array();
  std::vector<std::string> csv_rows;
  for (int c = 0; c < k; ++c) {
    json row;
    row["cluster"] = c;
    row["size"] = sizes[static_cast<std::size_t>(c)];
    json top = json::array();
    for (const auto& [word, score] :
         word_stats.top_words(c, static_cast<std::size_t>(cfg.top_words))) {
      top.push_back({{"word", word}, {"relative_mean", score}});
    }
    row["top_words"] = std::move(top);
    std::string csv_row = std::to_string(c) + "," + std::to_string(sizes[static_cast<std::size_t>(c)]);
    if (demographics) {
      const auto& d = demographics->rows[static_cast<std::size_t>(c)];
      row["known_gender"] = d.known_gender;
      row["female_fraction"] = d.female_fraction;
      row["female_p"] = d.female_test.p_value;
      row["female_null_q025"] = d.female_test.null_q025;
      row["female_null_q975"] = d.female_test.null_q975;
      row["female_outside_null95"] = d.female_outside_null95;
      row["known_age"] = d.known_age;
      row["mean_age"] = d.mean_age;
      row["age_p"] = d.age_test.p_value;
      row["age_null_q025"] = d.age_test.null_q025;
      row["age_null_q975"] = d.age_test.null_q975;
      row["age_outside_null95"] = d.age_outside_null95;
      csv_row += "," + fmt(d.female_fraction) + "," + fmt(d.female_test.p_value) + "," +
                 (d.female_outside_null95 ? std::string("true") : std::string("false")) + "," +
                 fmt(d.mean_age) + "," + fmt(d.age_test.p_value) + "," +
                 (d.age_outside_null95 ? std::string("true") : std::string("false"));
    }
    if (feature_profile) {
      json ratios;
      for (std::size_t f = 0; f < humorkit::kFeatureCount; ++f) {
        ratios[std::string(humorkit::kFeatureNames[f])] =
            feature_profile->ratio[static_cast<std::size_t>(c)][f];
      }
      row["feature_ratio"] = std::move(ratios);
      for (std::size_t f = 0; f < humorkit::kFeatureCount; ++f) {
        csv_row += "," + fmt(feature_profile->ratio[static_cast<std::size_t>(c)][f]);
      }
    }
    clusters.push_back(std::move(row));
    csv_rows.push_back(std::move(csv_row));
  }
  report["clusters"] = std::move(clusters);

  std::string header = "cluster,size";
  if (demographics) {
    header += ",female_fraction,female_p,female_outside_null95,mean_age,age_p,age_outside_null95";
  }
  if (feature_profile) {
    for (std::size_t f = 0; f < humorkit::kFeatureCount; ++f) {
      header += ",";
      header += humorkit::kFeatureNames[f];
    }
  }
  emit_report(cfg, report, header, csv_rows);
  return 0;
}

// ---------------------------------------------------------------------------
// kya
// ---------------------------------------------------------------------------

int cmd_kya(const RunConfig& cfg) {
  const auto emb = load_embedding(cfg);
  const auto records = load_raters(cfg);
  const auto variant = parse_variant(cfg.variant);
  const auto result =
      humorkit::run_kya(records, emb, variant, !cfg.unnormalized_r, cfg.threads);

  json report = report_envelope(cfg);
  report["variant"] = std::string(humorkit::kya_variant_name(result.variant));
  report["raters_total"] = records.size();
  report["excluded_raters"] = result.excluded_raters.size();
  report["excluded_rater_ids"] = result.excluded_raters;
  report["eligible_pairs"] = result.eligible;
  report["eligibility_fraction"] = result.eligibility_fraction;
  report["successes"] = result.successes;
  report["ties"] = result.ties;
  report["success_rate"] = result.success_rate;

  const std::string row = std::string(humorkit::kya_variant_name(result.variant)) + "," +
                          std::to_string(result.eligible) + "," +
                          std::to_string(result.successes) + "," + std::to_string(result.ties) +
                          "," + fmt(result.success_rate) + "," + fmt(result.eligibility_fraction) +
                          "," + std::to_string(result.excluded_raters.size());
  emit_report(cfg, report,
              "variant,eligible_pairs,successes,ties,success_rate,eligibility_fraction,"
              "excluded_raters",
              {row});
  return 0;
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int cmd_features(const RunConfig& cfg) {
  if (cfg.annotations_path.empty()) throw UsageError("--annotations is required for features");
  if (cfg.wordlist_path.empty()) throw UsageError("--wordlist is required for features");
  const auto emb = load_embedding(cfg);
  const auto records = load_raters(cfg);
  const auto annotations = humorkit::load_feature_annotations(cfg.annotations_path);
  const auto wordlist = humorkit::load_word_list(cfg.wordlist_path);

  const auto means = humorkit::word_mean_ratings(records);
  const auto target = humorkit::humor_target_with_floor(means, wordlist);
  const auto feature_report = humorkit::build_feature_report(
      annotations, emb, target, cfg.folds, cfg.reps, cfg.seed, cfg.threads,
      path_stem(cfg.embedding_path));

  json report = report_envelope(cfg);
  report["embedding"] = {{"name", feature_report.embedding_name},
                         {"tokens", emb.tokens.size()},
                         {"dim", emb.dim}};
  report["folds"] = feature_report.folds;
  report["repetitions"] = feature_report.repetitions;
  report["annotated_words"] = annotations.size();
  report["wordlist_words"] = wordlist.size();
  report["missing_words"] = feature_report.missing_words;

  json rows_json = json::array();
  std::vector<std::string> rows_csv;
  for (const auto& row : feature_report.rows) {
    rows_json.push_back({{"feature", row.name},
                         {"predictability", row.predictability},
                         {"ci95_halfwidth", row.ci95_halfwidth},
                         {"humor_r", row.humor_r}});
    rows_csv.push_back(row.name + "," + fmt(row.predictability) + "," + fmt(row.ci95_halfwidth) +
                       "," + fmt(row.humor_r));
  }
  report["rows"] = std::move(rows_json);

  emit_report(cfg, report, "feature,predictability,ci95_halfwidth,humor_r", rows_csv);
  return 0;
}

// ---------------------------------------------------------------------------
// group-diff
// ---------------------------------------------------------------------------

int cmd_group_diff(const RunConfig& cfg) {
  const auto records = load_raters(cfg);
  const humorkit::GroupAttribute attribute = cfg.attribute == "country"
                                                 ? humorkit::GroupAttribute::country
                                                 : humorkit::GroupAttribute::gender;

  std::optional<std::pair<std::string, std::string>> groups;
  if (!cfg.groups.empty()) {
    const auto comma = cfg.groups.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 >= cfg.groups.size()) {
      throw UsageError("--groups must look like A,B, got '" + cfg.groups + "'");
    }
    groups = {cfg.groups.substr(0, comma), cfg.groups.substr(comma + 1)};
  }

  std::optional<std::vector<std::string>> word_filter;
  if (!cfg.wordlist_path.empty()) {
    word_filter = humorkit::load_word_list(cfg.wordlist_path).words;
  }

  const auto table = humorkit::group_rating_diff(records, attribute, groups,
                                                 word_filter ? &*word_filter : nullptr);

  json report = report_envelope(cfg);
  report["attribute"] = cfg.attribute;
  report["group_a"] = table.group_a;
  report["group_b"] = table.group_b;
  report["tested"] = table.tested;
  report["words_skipped"] = table.words_skipped;

  json rows_json = json::array();
  std::vector<std::string> rows_csv;
  for (const auto& row : table.rows) {
    rows_json.push_back({{"word", row.word},
                         {"mean_a", row.mean_a},
                         {"mean_b", row.mean_b},
                         {"t", row.t},
                         {"p_value", row.p_value},
                         {"p_adjusted", row.p_adjusted},
                         {"direction", row.direction}});
    rows_csv.push_back(humorkit::csv_escape(row.word) + "," + fmt(row.mean_a) + "," +
                       fmt(row.mean_b) + "," + fmt(row.t) + "," + fmt(row.p_value) + "," +
                       fmt(row.p_adjusted) + "," + humorkit::csv_escape(row.direction));
  }
  report["rows"] = std::move(rows_json);

  emit_report(cfg, report, "word,mean_a,mean_b,t,p_value,p_adjusted,direction", rows_csv);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

std::string records_csv_text(const RunConfig& cfg,
                             const std::vector<humorkit::RaterRecord>& records) {
  // Reuse the canonical writer, then prepend the config echo; the reader
  // skips '#' lines, so the file stays loadable.
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() /
      ("humorkit-records-" + std::to_string(::getpid()) + ".csv");
  humorkit::write_rater_records_csv(records, tmp);
  std::ifstream in(tmp, std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  in.close();
  std::filesystem::remove(tmp);
  return csv_preamble(cfg) + body.str();
}

int cmd_simulate(const RunConfig& cfg) {
  humorkit::WordList wordlist;
  std::string word_source;
  if (!cfg.wordlist_path.empty()) {
    wordlist = humorkit::load_word_list(cfg.wordlist_path);
    word_source = cfg.wordlist_path;
  } else if (cfg.synthetic_words > 0) {
    wordlist.words = synthetic_word_list(cfg.synthetic_words);
    word_source = "synthetic";
  } else {
    throw UsageError("simulate needs --wordlist or --synthetic-words");
  }
  if (wordlist.words.empty()) throw DataError("simulate: the word list is empty");

  std::optional<humorkit::EmbeddingMatrix> emb;
  if (!cfg.embedding_path.empty()) emb = load_embedding(cfg);
  if (cfg.topics > 0 && !emb) {
    throw UsageError("simulate with --topics needs --embedding for the topic space");
  }

  humorkit::PopulationOptions pop_options;
  pop_options.count = cfg.raters_count;
  pop_options.noise = cfg.noise;
  pop_options.topics = cfg.topics;
  pop_options.taste_jitter = cfg.jitter;
  pop_options.gender_skew = cfg.gender_skew;
  pop_options.age_skew = cfg.age_skew;
  if (!cfg.position_bias.empty()) {
    std::array<double, 6> bias{};
    std::copy_n(cfg.position_bias.begin(), 6, bias.begin());
    pop_options.position_bias = bias;
  }
  const auto population = humorkit::make_population(pop_options, wordlist.words,
                                                    emb ? &*emb : nullptr, cfg.seed);

  json report = report_envelope(cfg);
  report["words"] = {{"count", wordlist.words.size()}, {"source", word_source}};
  report["population"] = {{"count", population.size()},
                          {"topics", cfg.topics},
                          {"noise", cfg.noise}};

  std::vector<humorkit::RaterRecord> records;
  if (is_power_of_six(wordlist.words.size())) {
    // Every rater rates the full list in one forced-choice session.
    report["mode"] = "sessions";
    humorkit::SimStats totals;
    records.reserve(population.size());
    for (std::size_t r = 0; r < population.size(); ++r) {
      humorkit::SimStats stats;
      records.push_back(humorkit::simulate_rater(population[r], wordlist.words,
                                                 humorkit::derive_seed(cfg.seed, 0x100000 + r),
                                                 &stats));
      totals.clicks += stats.clicks;
      for (std::size_t p = 0; p < 6; ++p) {
        totals.position_click_counts[p] += stats.position_click_counts[p];
      }
      totals.nonstandard_word_count = totals.nonstandard_word_count || stats.nonstandard_word_count;
    }
    report["stats"] = {{"clicks", totals.clicks},
                       {"position_click_counts", totals.position_click_counts},
                       {"nonstandard_word_count", totals.nonstandard_word_count}};
  } else {
    // Large list: run the full winnowing cascade down to complete sessions.
    report["mode"] = "cascade";
    humorkit::StageParams params;
    params.stage1_min_views = cfg.stage1_min_views;
    params.none_top_fraction = cfg.none_top_fraction;
    params.stage2_min_views = cfg.stage2_min_views;
    params.stage3_word_count = cfg.stage3_words;
    params.stem_prefix = cfg.stem_prefix;
    const auto study = humorkit::simulate_cascade(wordlist, population, params, cfg.seed,
                                                  cfg.threads);
    records = study.records;

    const auto tally_json = [](const humorkit::StageTally& tally) {
      json t;
      t["candidates"] = tally.words.size();
      t["advancing"] = tally.advancing.size();
      json rows = json::array();
      for (std::size_t i = 0; i < tally.words.size(); ++i) {
        rows.push_back({{"word", tally.words[i]},
                        {"views", tally.views[i]},
                        {"picks", tally.picks[i]}});
      }
      t["rows"] = std::move(rows);
      return t;
    };
    report["stage1"] = tally_json(study.stage1);
    report["stage2"] = tally_json(study.stage2);
    report["stage3_words"] = study.stage3_words;
  }
  report["records_count"] = records.size();

  if (!cfg.records_path.empty()) {
    std::ofstream out(cfg.records_path, std::ios::binary);
    if (!out) throw DataError("cannot open records file: " + cfg.records_path);
    out << records_csv_text(cfg, records);
    if (!out) throw DataError("failed writing records file: " + cfg.records_path);
  }

  if (cfg.format == "csv") {
    // The CSV face of a simulation is the dataset itself, ready to feed back
    // into cluster/kya/features/group-diff.
    write_output(cfg, records_csv_text(cfg, records));
  } else {
    write_output(cfg, report.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// CLI wiring
// ---------------------------------------------------------------------------

void add_io_flags(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Master seed for all randomized steps")
      ->capture_default_str();
  sub->add_option("--out", cfg.out_path, "Output path (default: stdout)");
  sub->add_option("--format", cfg.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Parallelism cap (never changes results)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_embedding_flags(CLI::App* sub, RunConfig& cfg, bool required) {
  auto* opt = sub->add_option("--embedding", cfg.embedding_path, "Embedding file");
  if (required) opt->required();
  sub->add_option("--embedding-format", cfg.embedding_format, "Embedding file format")
      ->check(CLI::IsMember({"text", "word2vec-bin"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"humorkit: linear humor probes, personalized taste vectors, "
               "rater clustering, and rating-protocol simulation"};
  app.set_version_flag("--version", std::string(humorkit::kVersion));
  app.require_subcommand(1);

  auto* direction = app.add_subcommand(
      "humor-direction", "Fit the linear humor probe and report full-fit and cross-validated r");
  add_embedding_flags(direction, cfg, true);
  direction->add_option("--eh", cfg.eh_path, "Word ratings file (1-5 scale)")->required();
  direction->add_option("--folds", cfg.folds, "Cross-validation folds")
      ->check(CLI::PositiveNumber)->capture_default_str();
  direction->add_option("--reps", cfg.reps, "Cross-validation repetitions")
      ->check(CLI::PositiveNumber)->capture_default_str();
  direction->add_option("--ridge", cfg.ridge, "Ridge penalty (negative = auto)");
  direction->add_option("--save-probe", cfg.save_probe_path, "Persist the full fit as a probe file");
  add_io_flags(direction, cfg);

  auto* score = app.add_subcommand(
      "score", "Score words with a fitted probe (inline fit or a saved probe file)");
  add_embedding_flags(score, cfg, true);
  score->add_option("--eh", cfg.eh_path, "Word ratings file, for inline fits and actual values");
  score->add_option("--probe", cfg.probe_path, "Load a saved probe instead of fitting");
  score->add_option("--save-probe", cfg.save_probe_path, "Persist the probe after fitting");
  score->add_option("--words", cfg.words, "Words to score")->delimiter(',');
  score->add_option("--words-file", cfg.words_file, "File with one word per line");
  score->add_option("--ridge", cfg.ridge, "Ridge penalty (negative = auto)");
  add_io_flags(score, cfg);

  auto* cluster = app.add_subcommand(
      "cluster", "Cluster rater taste vectors; report top words, demographics, features");
  add_embedding_flags(cluster, cfg, true);
  cluster->add_option("--raters", cfg.raters_path, "Rater records CSV")->required();
  cluster->add_option("--annotations", cfg.annotations_path, "Feature annotations file");
  cluster->add_option("--k", cfg.k, "Cluster count");
  cluster->add_option("--k-range", cfg.k_range, "Elbow sweep A..B, clusters at the bend");
  cluster->add_option("--shuffles", cfg.shuffles, "Permutation shuffles for demographics (0 = skip)")
      ->capture_default_str();
  cluster->add_option("--top-words", cfg.top_words, "Top words per cluster")
      ->check(CLI::PositiveNumber)->capture_default_str();
  cluster->add_flag("--per-rater-profile", cfg.per_rater_profile,
                    "Average feature scores per rater before pooling, instead of pooling picks");
  add_io_flags(cluster, cfg);

  auto* kya = app.add_subcommand(
      "kya", "Know-your-audience test: match rating differences against taste vectors");
  add_embedding_flags(kya, cfg, true);
  kya->add_option("--raters", cfg.raters_path, "Rater records CSV")->required();
  kya->add_option("--variant", cfg.variant, "Pairing regime")
      ->check(CLI::IsMember({"easy", "normal", "hard"}))
      ->capture_default_str();
  kya->add_flag("--unnormalized-r", cfg.unnormalized_r,
                "Use raw mean taste vectors instead of renormalizing to unit length");
  add_io_flags(kya, cfg);

  auto* features = app.add_subcommand(
      "features", "Feature predictability and humor correlation, plus the word-length baseline");
  add_embedding_flags(features, cfg, true);
  features->add_option("--raters", cfg.raters_path, "Rater records CSV")->required();
  features->add_option("--annotations", cfg.annotations_path, "Feature annotations file")
      ->required();
  features->add_option("--wordlist", cfg.wordlist_path, "Full word list for the rating floor")
      ->required();
  features->add_option("--folds", cfg.folds, "Cross-validation folds")
      ->check(CLI::PositiveNumber)->capture_default_str();
  features->add_option("--reps", cfg.reps, "Cross-validation repetitions")
      ->check(CLI::PositiveNumber)->capture_default_str();
  add_io_flags(features, cfg);

  auto* group_diff = app.add_subcommand(
      "group-diff", "Per-word rating differences between demographic groups");
  group_diff->add_option("--raters", cfg.raters_path, "Rater records CSV")->required();
  group_diff->add_option("--attribute", cfg.attribute, "Grouping attribute")
      ->check(CLI::IsMember({"gender", "country"}))
      ->capture_default_str();
  group_diff->add_option("--groups", cfg.groups, "Explicit group pair A,B");
  group_diff->add_option("--wordlist", cfg.wordlist_path, "Restrict the comparison to these words");
  add_io_flags(group_diff, cfg);

  auto* simulate = app.add_subcommand(
      "simulate", "Simulate the forced-choice protocol over a word list");
  add_embedding_flags(simulate, cfg, false);
  simulate->add_option("--wordlist", cfg.wordlist_path, "Word list to simulate over");
  simulate->add_option("--synthetic-words", cfg.synthetic_words,
                       "Generate this many synthetic words instead of --wordlist");
  simulate->add_option("--raters-count", cfg.raters_count, "Population size")
      ->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--topics", cfg.topics, "Taste topics (0 = random tastes)")
      ->capture_default_str();
  simulate->add_option("--noise", cfg.noise, "Random-click probability in [0,1]")
      ->capture_default_str();
  simulate->add_option("--jitter", cfg.jitter, "Taste spread around each topic")
      ->capture_default_str();
  simulate->add_option("--gender-skew", cfg.gender_skew, "Female-probability offset by topic")
      ->capture_default_str();
  simulate->add_option("--age-skew", cfg.age_skew, "Mean-age offset by topic, in years")
      ->capture_default_str();
  simulate->add_option("--position-bias", cfg.position_bias,
                       "Six per-position click probabilities for noise clicks")
      ->expected(6)->delimiter(',');
  simulate->add_option("--stage3-words", cfg.stage3_words, "Final session size (power of six)")
      ->capture_default_str();
  simulate->add_option("--stage1-min-views", cfg.stage1_min_views, "Stage-1 views per word")
      ->capture_default_str();
  simulate->add_option("--stage2-min-views", cfg.stage2_min_views, "Stage-2 views per word")
      ->capture_default_str();
  simulate->add_option("--none-top-fraction", cfg.none_top_fraction,
                       "Taste depth before a rater declines a sextuple")
      ->capture_default_str();
  simulate->add_option("--stem-prefix", cfg.stem_prefix, "Shared-prefix length for stem dedup")
      ->capture_default_str();
  simulate->add_option("--records", cfg.records_path, "Also write the simulated dataset CSV here");
  add_io_flags(simulate, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (direction->parsed()) {
      cfg.subcommand = "humor-direction";
      return cmd_humor_direction(cfg);
    }
    if (score->parsed()) {
      cfg.subcommand = "score";
      return cmd_score(cfg);
    }
    if (cluster->parsed()) {
      cfg.subcommand = "cluster";
      return cmd_cluster(cfg);
    }
    if (kya->parsed()) {
      cfg.subcommand = "kya";
      return cmd_kya(cfg);
    }
    if (features->parsed()) {
      cfg.subcommand = "features";
      return cmd_features(cfg);
    }
    if (group_diff->parsed()) {
      cfg.subcommand = "group-diff";
      return cmd_group_diff(cfg);
    }
    if (simulate->parsed()) {
      cfg.subcommand = "simulate";
      return cmd_simulate(cfg);
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
