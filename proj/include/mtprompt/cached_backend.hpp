#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "mtprompt/backend.hpp"

namespace mtprompt {

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t invalidated = 0;
};

/// Content-addressed, on-disk response cache in front of another backend.
///
/// An entry lives at <dir>/<kind>/<hh>/<sha256>.json where the digest is taken
/// over the canonical (key-sorted, compact) JSON of {"kind", "request"}. Each
/// file stores the request next to the response; a file that fails to parse or
/// whose stored request differs is deleted, logged and recomputed. Failures
/// (exceptions) are never cached.
class CachedBackend : public Backend {
 public:
  CachedBackend(std::shared_ptr<Backend> upstream, std::filesystem::path dir);

  GenerationResult generate(const GenerationRequest& req) override;
  ScoreResult score_loglikelihood(const std::string& text) override;
  EmbeddingVector embed(const std::string& text, const LangCode& lang) override;
  double qe_score(const std::string& src, const std::string& hyp) override;
  double comet_score(const std::string& src, const std::string& hyp, const std::string& ref) override;

  CacheStats stats() const;
  const std::filesystem::path& directory() const noexcept { return dir_; }

  /// Digest used as the file name for (kind, request).
  static std::string cache_key(const std::string& kind, const nlohmann::json& request);

 private:
  template <typename Compute, typename Decode>
  auto cached(const std::string& kind, const nlohmann::json& request, Compute&& compute, Decode&& decode)
      -> decltype(decode(nlohmann::json{}));

  std::optional<nlohmann::json> read_entry(const std::filesystem::path& file, const nlohmann::json& request);
  void write_entry(const std::filesystem::path& file, const nlohmann::json& request,
                   const nlohmann::json& response);

  std::shared_ptr<Backend> upstream_;
  std::filesystem::path dir_;
  std::array<std::mutex, 64> stripes_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> invalidated_{0};
  std::atomic<std::size_t> tmp_counter_{0};
  DimensionGuard dims_;
};

/// Wraps `upstream` in a CachedBackend rooted at `dir` (created if missing).
std::shared_ptr<CachedBackend> with_cache(std::shared_ptr<Backend> upstream, const std::filesystem::path& dir);

}  // namespace mtprompt
