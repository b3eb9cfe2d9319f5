#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtprompt/backend.hpp"
#include "mtprompt/corpus.hpp"
#include "mtprompt/prompt_template.hpp"

namespace mtprompt {

/// Demonstration features of a single prompt example.
struct FeatureVector {
  std::size_t slength = 0;
  std::size_t tlength = 0;
  double lm_score = 0.0;
  std::optional<double> mt_score;
  double sem_score = 0.0;
  std::optional<double> case_sem_src;
  std::optional<double> case_sem_tgt;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureName { slength, tlength, lm_score, mt_score, sem_score, case_sem_src, case_sem_tgt };

inline constexpr FeatureName kAllFeatures[] = {FeatureName::slength,      FeatureName::tlength,
                                               FeatureName::lm_score,     FeatureName::mt_score,
                                               FeatureName::sem_score,    FeatureName::case_sem_src,
                                               FeatureName::case_sem_tgt};

/// Column names: "slength", ..., "case_sem_tgt".
std::string_view to_string(FeatureName f);
FeatureName parse_feature_name(std::string_view text);
std::optional<double> feature_value(const FeatureVector& v, FeatureName f);

/// Whitespace tokens for space-delimited scripts, non-space characters for zh/ja.
std::size_t token_count(std::string_view text, const LangCode& lang);

/// Cosine similarity clamped to [-1, 1]. Throws UndefinedSimilarityError on a zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Length-normalized log likelihood of the example rendered as a completed 1-shot block.
double lm_score(const ParallelExample& example, const PromptTemplate& t, const PromptRenderer& renderer,
                Backend& backend);

/// cos(embed(src), embed(tgt)).
double sem_score(const ParallelExample& example, Backend& backend);

/// QE of (src, tgt); std::nullopt when the scorer is degraded.
std::optional<double> mt_score(const ParallelExample& example, Backend& backend);

enum class ExampleSide { src, tgt };

/// Test inputs with the language they are written in (the test pair's source).
struct TestInputs {
  LangCode lang;
  std::vector<std::string> texts;
};

/// Mean over test inputs of cos(embed(test input), embed(example side)).
double case_sem(const ParallelExample& example, const TestInputs& test_inputs, ExampleSide side, Backend& backend);

/// Computes feature vectors over a pool. Test-input embeddings are fetched
/// once per extractor and reused for every example.
class FeatureExtractor {
 public:
  FeatureExtractor(Backend& backend, PromptRenderer renderer, PromptTemplate lm_template = {});

  /// All seven features. case_sem_* are missing when `test_inputs` is empty,
  /// mt_score when the QE scorer is degraded.
  FeatureVector compute_all(const ParallelExample& example, const TestInputs& test_inputs);

  /// compute_all over every example, `jobs` at a time; output follows input order.
  std::vector<FeatureVector> compute_pool(const std::vector<ParallelExample>& examples,
                                          const TestInputs& test_inputs, std::size_t jobs = 1);

 private:
  const std::vector<EmbeddingVector>& test_embeddings(const TestInputs& inputs);

  Backend& backend_;
  PromptRenderer renderer_;
  PromptTemplate lm_template_;
  std::mutex mu_;
  std::map<std::pair<std::string, std::vector<std::string>>, std::vector<EmbeddingVector>> test_cache_;
};

/// TSV: header "id slength ... case_sem_tgt", then one row per example, "NA" for missing.
void write_feature_tsv(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<FeatureVector>& features);

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<FeatureVector> features;

  /// id -> value for one feature; ids with a missing value are left out.
  std::map<std::string, double> column(FeatureName f) const;
};

FeatureTable read_feature_tsv(std::istream& in);

/// Shortest round-trip decimal for `x`.
std::string format_double(double x);

}  // namespace mtprompt
