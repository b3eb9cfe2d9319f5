#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "mtprompt/backend.hpp"

namespace mtprompt {

struct HttpBackendOptions {
  /// LLM endpoint base, e.g. "http://localhost:8000". Serves POST /generate and /score.
  std::string llm_url;
  /// Scorer sidecar base. Serves POST /embed, /qe, /comet and GET /health.
  std::string scorer_url;
  /// Sent as "Authorization: Bearer <key>" to the LLM endpoint when set.
  std::string api_key;
  /// Retries after the first attempt, transport errors only.
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
  std::size_t max_in_flight = 8;
  std::chrono::seconds timeout{300};
};

/// JSON-over-HTTP client for the LLM endpoint and the scorer sidecar.
///
/// Wire format (LLM): {"prompt", "beam_size", "max_new_tokens", "stop"} -> {"text", "tokens"}
/// and {"text_to_score"} -> {"logprob", "tokens"}. A 413 reply means the text
/// does not fit the model context.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions opts);
  ~HttpBackend() override;

  GenerationResult generate(const GenerationRequest& req) override;
  ScoreResult score_loglikelihood(const std::string& text) override;
  EmbeddingVector embed(const std::string& text, const LangCode& lang) override;
  double qe_score(const std::string& src, const std::string& hyp) override;
  double comet_score(const std::string& src, const std::string& hyp, const std::string& ref) override;

  /// GET /health -> {"dim": D, "models": {...}}. Pins the session embedding dimension.
  nlohmann::json health();

  std::size_t embedding_dim() const;
  bool has_scorer() const noexcept { return scorer_ != nullptr; }

 private:
  enum class Endpoint { llm, scorer };
  nlohmann::json post(Endpoint ep, const std::string& path, const nlohmann::json& body);
  nlohmann::json get(Endpoint ep, const std::string& path);

  struct Target;
  HttpBackendOptions opts_;
  std::unique_ptr<Target> llm_;
  std::unique_ptr<Target> scorer_;
  std::counting_semaphore<> in_flight_;
  DimensionGuard dims_;
};

}  // namespace mtprompt
