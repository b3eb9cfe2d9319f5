#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "mtprompt/backend.hpp"

namespace mtprompt {

/// Table-driven backend for tests and dry runs.
///
/// Configure it fully before sharing it between threads; after that every
/// call is read-only apart from the atomic call counters.
///
/// In strict mode nothing is fabricated: a prompt or text with no table entry
/// and no callback raises MockMissError. Lenient mode answers unknown prompts
/// with an empty continuation.
class MockBackend : public Backend {
 public:
  enum class PromptMatch {
    exact,   ///< the whole prompt is the key
    suffix,  ///< the longest key the prompt ends with
  };

  /// Returns std::nullopt for "no entry".
  using GenerateFn = std::function<std::optional<std::string>(const std::string& prompt)>;
  using ScoreFn = std::function<std::optional<ScoreResult>(const std::string& text)>;
  using EmbedFn = std::function<EmbeddingVector(const std::string& text, const LangCode& lang)>;
  using QeFn = std::function<double(const std::string& src, const std::string& hyp)>;
  using CometFn = std::function<double(const std::string& src, const std::string& hyp, const std::string& ref)>;

  explicit MockBackend(bool strict = true) : strict_(strict) {}

  MockBackend& set_prompt_match(PromptMatch m);
  MockBackend& add_generation(std::string prompt, std::string continuation);
  MockBackend& set_generate_fn(GenerateFn fn);
  /// Synthetic latency: wall_time_s = tokens * seconds_per_token.
  MockBackend& set_seconds_per_token(double s);

  MockBackend& add_score(std::string text, ScoreResult result);
  MockBackend& set_fixed_score(ScoreResult result);
  MockBackend& set_score_fn(ScoreFn fn);
  /// Texts longer than this many bytes raise ContextOverflowError.
  MockBackend& set_max_context_bytes(std::size_t n);

  MockBackend& set_embed_fn(EmbedFn fn);
  /// Dimension of the default embedding (a unit basis vector picked by text hash).
  MockBackend& set_embedding_dim(std::size_t dim);

  MockBackend& set_qe_constant(double value);
  MockBackend& set_qe_fn(QeFn fn);
  MockBackend& set_qe_available(bool available);

  /// Echo scorer: `max_value` when hyp == ref, else max_value times token overlap.
  MockBackend& set_comet_echo(double max_value);
  MockBackend& set_comet_fn(CometFn fn);
  MockBackend& set_comet_available(bool available);

  GenerationResult generate(const GenerationRequest& req) override;
  ScoreResult score_loglikelihood(const std::string& text) override;
  EmbeddingVector embed(const std::string& text, const LangCode& lang) override;
  double qe_score(const std::string& src, const std::string& hyp) override;
  double comet_score(const std::string& src, const std::string& hyp, const std::string& ref) override;

  std::size_t generate_calls() const noexcept { return generate_calls_; }
  std::size_t score_calls() const noexcept { return score_calls_; }
  std::size_t embed_calls() const noexcept { return embed_calls_; }
  std::size_t qe_calls() const noexcept { return qe_calls_; }
  std::size_t comet_calls() const noexcept { return comet_calls_; }
  std::size_t total_calls() const noexcept {
    return generate_calls_ + score_calls_ + embed_calls_ + qe_calls_ + comet_calls_;
  }
  void reset_counters();

  /// Default embedding: e_{h mod dim} with h = FNV-1a of "lang\ttext".
  static EmbeddingVector hash_basis_embedding(const std::string& text, const LangCode& lang, std::size_t dim);
  /// Token-overlap similarity used by the echo scorer, in [0, 1].
  static double token_overlap(const std::string& hyp, const std::string& ref);

 private:
  std::optional<std::string> lookup_generation(const std::string& prompt) const;

  bool strict_;
  PromptMatch match_ = PromptMatch::exact;
  std::map<std::string, std::string> generations_;
  GenerateFn generate_fn_;
  double seconds_per_token_ = 0.0;

  std::map<std::string, ScoreResult> scores_;
  std::optional<ScoreResult> fixed_score_;
  ScoreFn score_fn_;
  std::optional<std::size_t> max_context_bytes_;

  EmbedFn embed_fn_;
  std::size_t embedding_dim_ = 16;
  DimensionGuard dims_;

  std::optional<double> qe_constant_;
  QeFn qe_fn_;
  bool qe_available_ = true;

  std::optional<double> comet_echo_max_;
  CometFn comet_fn_;
  bool comet_available_ = true;

  std::atomic<std::size_t> generate_calls_{0};
  std::atomic<std::size_t> score_calls_{0};
  std::atomic<std::size_t> embed_calls_{0};
  std::atomic<std::size_t> qe_calls_{0};
  std::atomic<std::size_t> comet_calls_{0};
};

}  // namespace mtprompt
