#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtprompt/corpus.hpp"

namespace mtprompt {

inline constexpr int kDefaultBeamSize = 2;
inline constexpr int kDefaultMaxNewTokens = 256;

struct GenerationRequest {
  std::string prompt;
  int beam_size = kDefaultBeamSize;
  int max_new_tokens = kDefaultMaxNewTokens;
  std::vector<std::string> stop_sequences;
};

struct GenerationResult {
  /// Continuation with the first stop sequence and everything after it removed.
  std::string text;
  std::size_t tokens_generated = 0;
  double wall_time_s = 0.0;

  double seconds_per_token() const {
    return tokens_generated == 0 ? 0.0 : wall_time_s / static_cast<double>(tokens_generated);
  }
  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

/// Natural-log probability of a text and the tokenizer's token count.
struct ScoreResult {
  double total_logprob = 0.0;
  std::size_t token_count = 0;
  friend bool operator==(const ScoreResult&, const ScoreResult&) = default;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Everything the pipeline needs from neural models: generation and scoring
/// from the LLM endpoint; embeddings, QE and COMET from the scorer sidecar.
///
/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationResult generate(const GenerationRequest& req) = 0;
  virtual ScoreResult score_loglikelihood(const std::string& text) = 0;
  virtual EmbeddingVector embed(const std::string& text, const LangCode& lang) = 0;
  /// Reference-free quality estimate. Throws ScorerUnavailableError when degraded.
  virtual double qe_score(const std::string& src, const std::string& hyp) = 0;
  /// Reference-based COMET. Throws ScorerUnavailableError when degraded.
  virtual double comet_score(const std::string& src, const std::string& hyp, const std::string& ref) = 0;
};

/// Cuts `text` at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

/// Throws std::invalid_argument unless beam_size >= 1, max_new_tokens >= 1 and the prompt is nonempty.
void validate(const GenerationRequest& req);

/// Enforces one embedding dimension per session; a change is a ProtocolError.
class DimensionGuard {
 public:
  void check(std::size_t dim, std::string_view source);
  std::optional<std::size_t> dim() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::size_t> dim_;
};

}  // namespace mtprompt
