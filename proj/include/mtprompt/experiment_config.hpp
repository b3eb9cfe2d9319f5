#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtprompt/corpus.hpp"
#include "mtprompt/features.hpp"
#include "mtprompt/prompt_template.hpp"
#include "mtprompt/selection.hpp"

namespace mtprompt {

enum class ExperimentKind { translation, correlation, transfer, pivot };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view text);

/// Sample counts used by the published protocols.
inline constexpr std::size_t kCorrelationSamples = 600;
inline constexpr std::size_t kCrossLingualSamples = 300;
inline constexpr std::size_t kCrossDomainSamples = 200;
inline constexpr std::size_t kSamplesPerK = 100;
inline constexpr std::size_t kDemonstrationsPerDirection = 3;
inline constexpr std::size_t kAblationTestSize = 100;
inline constexpr std::size_t kDocumentChunkSize = 4;

/// One translation direction with its data.
struct DirectionSpec {
  /// Defaults to the pair ("de-en"); must be unique within a config.
  std::string name;
  LanguagePair pair{LangCode("de"), LangCode("en")};
  std::filesystem::path pool;
  PoolFormat pool_format = PoolFormat::tsv;
  PoolTier tier = PoolTier::high_quality;
  /// Parallel test file in `pool_format`. When empty, `test_size` examples are
  /// held out of the pool instead.
  std::filesystem::path test;
  std::size_t test_size = kAblationTestSize;
  /// Document test set; chunks of `chunk_size` sentences are translated as one unit.
  std::filesystem::path documents;
  std::size_t chunk_size = kDocumentChunkSize;
  /// Precomputed feature TSV for the pool.
  std::filesystem::path features;
  std::filesystem::path mono_src;
  std::filesystem::path mono_tgt;
};

/// "zero_shot", "random", "topk:<feature>", "combined", "back_translation",
/// "forward_translation", "random_pair", "source_only", "target_only".
struct StrategySpec {
  enum class Kind {
    zero_shot,
    random,
    topk,
    combined,
    back_translation,
    forward_translation,
    random_pair,
    source_only,
    target_only,
  };
  Kind kind = Kind::zero_shot;
  FeatureName feature = FeatureName::sem_score;

  std::string str() const;
  static StrategySpec parse(std::string_view text);
  /// True when the demonstration does not depend on the seed.
  bool deterministic() const;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

struct BackendSpec {
  /// "http" or "mock".
  std::string kind = "mock";
  std::string url;
  std::string scorer_url;
  /// Mock modes: "echo" answers every test input with its reference; "table"
  /// replays {"prompt", "output"} JSONL records by prompt suffix and
  /// {"text", "logprob", "tokens"} records as LM scores.
  std::string mock_mode = "echo";
  std::filesystem::path table;
  bool strict = true;
  double seconds_per_token = 0.0;
};

struct PivotSpec {
  LangCode language{"en"};
  /// Shots per hop; demonstrations come from the hop pools.
  std::size_t k = 0;
  std::filesystem::path hop1_pool;
  std::filesystem::path hop2_pool;
  PoolFormat pool_format = PoolFormat::tsv;
};

struct TransferSpec {
  std::string s1;
  std::string s2;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::translation;
  std::vector<DirectionSpec> directions;
  std::vector<PromptTemplate> templates{PromptTemplate{}};
  std::vector<StrategySpec> strategies{StrategySpec{}};
  std::vector<std::size_t> ks{1};
  std::vector<std::uint64_t> seeds;
  std::size_t samples = kSamplesPerK;
  std::size_t min_tokens = 10;
  std::size_t max_tokens = 100;
  Ordering ordering = Ordering::ascending_score;
  CombinedParams combined;
  BackendSpec backend;
  PivotSpec pivot;
  std::optional<TransferSpec> transfer;
  /// Language-name table; the builtin one when empty.
  std::filesystem::path languages;

  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::size_t jobs = 1;

  /// Relative paths resolve against this directory.
  std::filesystem::path base_dir = ".";

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Round-trips through from_json. Paths are written as given.
  nlohmann::json to_json() const;

  /// Throws ConfigError on a missing file, an empty seed list, duplicate
  /// direction names, an unusable pivot or an unknown transfer setting.
  void validate() const;

  /// SHA-256 of the canonical JSON minus cache_dir, output_dir and jobs,
  /// which do not change results.
  std::string hash() const;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const DirectionSpec& direction(const std::string& name) const;
  SelectionParams selection(std::size_t k, std::uint64_t seed) const;
};

}  // namespace mtprompt
