#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtprompt/corpus.hpp"

namespace mtprompt {

class Backend;

// ---------------------------------------------------------------------------
// BLEU

enum class BleuTokenizer {
  intl_13a,      ///< mteval-v13a rules (SacreBLEU "13a")
  zh_character,  ///< CJK characters split, rest by 13a rules (SacreBLEU "zh")
};

enum class BleuSmoothing { none, exp };

struct BleuConfig {
  BleuTokenizer tokenizer = BleuTokenizer::intl_13a;
  int max_ngram = 4;
  BleuSmoothing smoothing = BleuSmoothing::none;

  /// "nrefs:1|case:mixed|eff:no|tok:13a|smooth:none|ngram:4"
  std::string signature() const;

  /// zh_character for Chinese targets, intl_13a otherwise.
  static BleuConfig for_target(const LangCode& lang);
};

/// Tokenizers, bit-compatible with SacreBLEU 2.x.
std::string tokenize_13a(std::string_view line);
std::string tokenize_zh(std::string_view line);
std::string tokenize(std::string_view line, BleuTokenizer tok);

struct BleuScore {
  double score = 0.0;
  std::vector<std::size_t> correct;
  std::vector<std::size_t> total;
  std::size_t sys_len = 0;
  std::size_t ref_len = 0;
  double brevity_penalty = 0.0;
};

/// Corpus BLEU in [0, 100], one reference per segment.
BleuScore corpus_bleu_detail(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                             const BleuConfig& cfg = {});
double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   const BleuConfig& cfg = {});

struct DocumentTranslation {
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
};

/// Joins each document's sentences (space, or nothing for zh_character) and
/// scores the joined documents as one corpus.
double doc_bleu(const std::vector<DocumentTranslation>& docs, const BleuConfig& cfg = {});

// ---------------------------------------------------------------------------
// Rank correlation

struct CorrelationResult {
  double rho = 0.0;
  /// Two-sided, Student-t approximation with n - 2 degrees of freedom.
  std::optional<double> p_value;
  std::size_t n = 0;
};

/// 1-based ranks; ties get the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman's rho with tie-averaged ranks. Throws UndefinedCorrelationError
/// when either input is constant; requires |x| == |y| >= 3.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Exact two-sided permutation p-value of Spearman's rho, n <= 10.
double spearman_permutation_p(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Model metrics and summaries

struct CometBatchResult {
  std::optional<double> mean;
  std::vector<double> segments;
  /// Set when the scorer was degraded and the score is missing.
  std::string warning;
};

/// Mean of per-segment COMET scores, fanned out over `jobs` threads in
/// segment order. A degraded scorer yields a missing mean, not an exception.
CometBatchResult comet_batch(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps,
                             const std::vector<std::string>& refs, Backend& backend, std::size_t jobs = 1);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> v);
/// Linear-interpolation quantile (numpy's default) over unsorted values.
double quantile(std::vector<double> values, double q);

}  // namespace mtprompt
