#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mtprompt {

/// One evaluated demonstration on one test set.
struct ScoreRow {
  std::string direction;
  std::string template_desc;
  std::string strategy;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  /// Index of the sampled demonstration in correlation and transfer studies.
  std::optional<std::size_t> sample;
  std::optional<double> bleu;
  /// COMET x 100; missing when the scorer was degraded.
  std::optional<double> comet;
  std::size_t n = 0;
  std::string demo_hash;
  std::size_t tokens = 0;
  double wall_time_s = 0.0;
  /// Sentences whose first pivot hop came back empty.
  std::size_t failed = 0;
  /// Non-empty when the row failed; such rows are left out of summaries.
  std::string error;

  double seconds_per_token() const { return tokens == 0 ? 0.0 : wall_time_s / static_cast<double>(tokens); }
  friend bool operator==(const ScoreRow&, const ScoreRow&) = default;
};

/// Seed-averaged scores. direction "*" is the unweighted mean over directions.
struct SummaryRow {
  std::string direction;
  std::string template_desc;
  std::string strategy;
  std::size_t k = 0;
  std::size_t rows = 0;
  std::optional<double> bleu;
  std::optional<double> comet;
  std::optional<double> delta_bleu;
  std::optional<double> delta_comet;
  double seconds_per_token = 0.0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

/// Spearman correlation of one feature against one metric. direction "*"
/// is the mean rho over directions, with n the number of directions.
struct CorrelationRow {
  std::string direction;
  std::string feature;
  std::string metric;
  double rho = 0.0;
  std::optional<double> p_value;
  std::size_t n = 0;
  friend bool operator==(const CorrelationRow&, const CorrelationRow&) = default;
};

struct TransferRow {
  std::string s1;
  std::string s2;
  std::string metric;
  std::optional<double> rho;
  std::optional<double> p_value;
  std::size_t n = 0;
  std::optional<double> mean_s1;
  std::optional<double> mean_s2;
  std::optional<double> zero_shot_s1;
  std::optional<double> zero_shot_s2;
  std::optional<double> delta_s1;
  std::optional<double> delta_s2;
  friend bool operator==(const TransferRow&, const TransferRow&) = default;
};

struct RunReport {
  std::string kind;
  std::string config_hash;
  std::vector<ScoreRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<CorrelationRow> correlations;
  std::vector<TransferRow> transfers;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);

  /// Key-sorted JSON with a trailing newline.
  std::string dump() const;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Seed-averaged summary per (direction, template, strategy, K) plus the
/// cross-direction mean, with deltas against the matching zero-shot row.
std::vector<SummaryRow> summarize(const std::vector<ScoreRow>& rows);

/// Columns: direction, strategy, K, BLEU, COMET, n, seed, demo_hash, then
/// template, sample, seconds_per_token, failed, error.
void write_rows_tsv(std::ostream& out, const std::vector<ScoreRow>& rows);

/// report.json and report.tsv in `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);
RunReport read_report(const std::filesystem::path& path);

/// Plot data in `dir`:
///   quantiles_bleu.csv, quantiles_comet.csv  one row per (direction, template, strategy, K)
///                                           with min, q1, median, q3, max over seeds and samples
///   k_curves.csv                             mean and sd per (direction, template, strategy, K, metric)
///   latency.csv                              seconds per token for every row
/// Zero-shot rows are left out of the distributions. An empty report gives header-only files.
void emit_plot_data(const RunReport& report, const std::filesystem::path& dir);

}  // namespace mtprompt
