#include "mtprompt/cached_backend.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "mtprompt/errors.hpp"
#include "mtprompt/hash.hpp"

namespace mtprompt {

using json = nlohmann::json;
namespace fs = std::filesystem;

CachedBackend::CachedBackend(std::shared_ptr<Backend> upstream, fs::path dir)
    : upstream_(std::move(upstream)), dir_(std::move(dir)) {
  if (!upstream_) throw std::invalid_argument("CachedBackend: null upstream");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw ConfigError("cache directory '" + dir_.string() + "' is not writable: " + ec.message());
  }
}

std::string CachedBackend::cache_key(const std::string& kind, const json& request) {
  return sha256_hex(json{{"kind", kind}, {"request", request}}.dump());
}

CacheStats CachedBackend::stats() const { return {hits_, misses_, invalidated_}; }

std::optional<json> CachedBackend::read_entry(const fs::path& file, const json& request) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  in.close();
  try {
    auto entry = json::parse(ss.str());
    if (entry.is_object() && entry.contains("request") && entry.contains("response") &&
        entry["request"] == request) {
      return std::move(entry["response"]);
    }
  } catch (const json::exception&) {
  }
  ++invalidated_;
  spdlog::warn("cache: invalid entry {} removed, recomputing", file.string());
  std::error_code ec;
  fs::remove(file, ec);
  return std::nullopt;
}

void CachedBackend::write_entry(const fs::path& file, const json& request, const json& response) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ostringstream tmp_name;
  tmp_name << file.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << "." << tmp_counter_++;
  const auto tmp = file.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << json{{"request", request}, {"response", response}}.dump();
    if (!out) {
      spdlog::warn("cache: could not write {}", tmp.string());
      fs::remove(tmp, ec);
      return;
    }
  }
  fs::rename(tmp, file, ec);
  if (ec) {
    spdlog::warn("cache: could not publish {}: {}", file.string(), ec.message());
    fs::remove(tmp, ec);
  }
}

template <typename Compute, typename Decode>
auto CachedBackend::cached(const std::string& kind, const json& request, Compute&& compute, Decode&& decode)
    -> decltype(decode(json{})) {
  const auto key = cache_key(kind, request);
  const auto file = dir_ / kind / key.substr(0, 2) / (key + ".json");
  std::lock_guard lock(stripes_[std::stoul(key.substr(0, 2), nullptr, 16) % stripes_.size()]);
  if (auto response = read_entry(file, request)) {
    try {
      auto value = decode(*response);
      ++hits_;
      return value;
    } catch (const json::exception&) {
      ++invalidated_;
      spdlog::warn("cache: undecodable entry {} removed, recomputing", file.string());
      std::error_code ec;
      fs::remove(file, ec);
    }
  }
  ++misses_;
  json response = compute();
  write_entry(file, request, response);
  return decode(response);
}

GenerationResult CachedBackend::generate(const GenerationRequest& req) {
  validate(req);
  const json request{{"prompt", req.prompt},
                     {"beam_size", req.beam_size},
                     {"max_new_tokens", req.max_new_tokens},
                     {"stop", req.stop_sequences}};
  return cached(
      "generate", request,
      [&] {
        const auto r = upstream_->generate(req);
        return json{{"text", r.text}, {"tokens", r.tokens_generated}, {"wall_time_s", r.wall_time_s}};
      },
      [](const json& j) {
        return GenerationResult{j.at("text").get<std::string>(), j.at("tokens").get<std::size_t>(),
                                j.at("wall_time_s").get<double>()};
      });
}

ScoreResult CachedBackend::score_loglikelihood(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("score_loglikelihood: empty text");
  return cached(
      "score", json{{"text_to_score", text}},
      [&] {
        const auto r = upstream_->score_loglikelihood(text);
        return json{{"logprob", r.total_logprob}, {"tokens", r.token_count}};
      },
      [](const json& j) { return ScoreResult{j.at("logprob").get<double>(), j.at("tokens").get<std::size_t>()}; });
}

EmbeddingVector CachedBackend::embed(const std::string& text, const LangCode& lang) {
  if (text.empty()) throw std::invalid_argument("embed: empty text");
  auto v = cached(
      "embed", json{{"text", text}, {"lang", lang.str()}},
      [&] { return json{{"vector", upstream_->embed(text, lang).values}}; },
      [](const json& j) { return EmbeddingVector{j.at("vector").get<std::vector<double>>()}; });
  dims_.check(v.dim(), "cached embed");
  return v;
}

double CachedBackend::qe_score(const std::string& src, const std::string& hyp) {
  return cached(
      "qe", json{{"src", src}, {"hyp", hyp}}, [&] { return json{{"score", upstream_->qe_score(src, hyp)}}; },
      [](const json& j) { return j.at("score").get<double>(); });
}

double CachedBackend::comet_score(const std::string& src, const std::string& hyp, const std::string& ref) {
  return cached(
      "comet", json{{"src", src}, {"hyp", hyp}, {"ref", ref}},
      [&] { return json{{"score", upstream_->comet_score(src, hyp, ref)}}; },
      [](const json& j) { return j.at("score").get<double>(); });
}

std::shared_ptr<CachedBackend> with_cache(std::shared_ptr<Backend> upstream, const fs::path& dir) {
  return std::make_shared<CachedBackend>(std::move(upstream), dir);
}

}  // namespace mtprompt
