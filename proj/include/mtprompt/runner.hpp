#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtprompt/backend.hpp"
#include "mtprompt/cached_backend.hpp"
#include "mtprompt/corpus.hpp"
#include "mtprompt/experiment_config.hpp"
#include "mtprompt/http_backend.hpp"
#include "mtprompt/mock_backend.hpp"
#include "mtprompt/report.hpp"

namespace mtprompt {

struct RunOptions {
  /// Render and persist prompts without generating; rows carry the error "dry run".
  bool dry_run = false;
};

/// Test data and selection pool of one direction. Without an explicit test
/// set, the test set is held out of the pool with the config's first seed.
struct DirectionData {
  DirectionSpec spec;
  std::optional<ExamplePool> pool;
  std::vector<ParallelExample> test;
};

DirectionData load_direction(const ExperimentConfig& cfg, const DirectionSpec& spec);

/// Language-name table named by the config, or the builtin one.
LanguageNameTable load_language_table(const ExperimentConfig& cfg);

struct BackendHandle {
  std::shared_ptr<Backend> backend;
  /// Set when cfg.cache_dir is set.
  std::shared_ptr<CachedBackend> cache;
  /// Set for mock backends.
  std::shared_ptr<MockBackend> mock;
  /// Set for HTTP backends.
  std::shared_ptr<HttpBackend> http;
};

/// The backend described by cfg.backend, behind the response cache when cfg.cache_dir is set.
BackendHandle make_backend(const ExperimentConfig& cfg, const std::string& api_key = "");

/// Mock that answers each test input's zero-shot block (any template in the
/// config) with its reference, scores LM likelihood from text length, and
/// uses echo COMET.
std::shared_ptr<MockBackend> make_echo_mock(const ExperimentConfig& cfg, bool strict = true);

/// Every direction x template x strategy x K x seed, plus one zero-shot row per direction and template.
RunReport run_translation(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts = {});

/// Samples cfg.samples 1-shot demonstrations per direction and correlates each
/// feature with BLEU and COMET across them.
RunReport run_correlation_study(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts = {});

/// Evaluates the same demonstrations sampled from S1 on S1 and S2.
RunReport run_transfer_study(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts = {});

/// Direct translation against source -> pivot -> target.
RunReport run_pivoting(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts = {});

/// Dispatches on cfg.kind.
RunReport run_experiment(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts = {});

/// run_meta.json: cache statistics and backend call counts, kept out of the
/// report so warm and cold runs produce the same report.
void write_run_meta(const std::filesystem::path& dir, const BackendHandle& handle);

}  // namespace mtprompt
