#include "mtprompt/http_backend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <optional>
#include <thread>

#include "mtprompt/errors.hpp"

namespace mtprompt {

using json = nlohmann::json;

struct HttpBackend::Target {
  std::string host;    // "http://host:port"
  std::string prefix;  // path prefix without trailing slash

  static std::unique_ptr<Target> parse(const std::string& url) {
    if (url.empty()) return nullptr;
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    auto t = std::make_unique<Target>();
    t->host = url.substr(0, path_start);
    if (path_start != std::string::npos) {
      t->prefix = url.substr(path_start);
      while (!t->prefix.empty() && t->prefix.back() == '/') t->prefix.pop_back();
    }
    return t;
  }
};

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

template <typename T>
T field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string(what) + ": response lacks \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string(what) + ": response field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions opts)
    : opts_(std::move(opts)),
      llm_(Target::parse(opts_.llm_url)),
      scorer_(Target::parse(opts_.scorer_url)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, opts_.max_in_flight))) {}

HttpBackend::~HttpBackend() = default;

json HttpBackend::post(Endpoint ep, const std::string& path, const json& body) {
  const Target* target = ep == Endpoint::llm ? llm_.get() : scorer_.get();
  const char* label = ep == Endpoint::llm ? "LLM endpoint" : "scorer";
  if (target == nullptr) {
    if (ep == Endpoint::scorer) throw ScorerUnavailableError("no scorer URL configured");
    throw ConfigError("no LLM endpoint URL configured");
  }
  const std::string payload = body.dump();
  const int attempts = 1 + std::max(0, opts_.max_retries);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    std::optional<httplib::Result> res;
    {
      SemaphoreGuard guard(in_flight_);
      httplib::Client cli(target->host);
      cli.set_connection_timeout(std::chrono::seconds(10));
      cli.set_read_timeout(opts_.timeout);
      cli.set_write_timeout(opts_.timeout);
      httplib::Headers headers;
      if (ep == Endpoint::llm && !opts_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + opts_.api_key);
      }
      res.emplace(cli.Post(target->prefix + path, headers, payload, "application/json"));
    }
    if (*res && !retryable_status((*res)->status)) {
      const auto& r = **res;
      if (r.status == 413) throw ContextOverflowError(std::string(label) + path + ": input exceeds model context");
      if (r.status < 200 || r.status >= 300) {
        throw ProtocolError(std::string(label) + path + ": HTTP " + std::to_string(r.status) + ": " + r.body);
      }
      try {
        return json::parse(r.body);
      } catch (const json::parse_error& e) {
        throw ProtocolError(std::string(label) + path + ": malformed JSON response: " + e.what());
      }
    }
    last_error = *res ? "HTTP " + std::to_string((*res)->status) : httplib::to_string((*res).error());
    if (attempt < attempts) {
      const auto delay = opts_.backoff_base * (1 << (attempt - 1));
      spdlog::warn("{}{}: {} (attempt {}/{}), retrying in {} ms", label, path, last_error, attempt, attempts,
                   delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
  if (ep == Endpoint::scorer) {
    throw ScorerUnavailableError(std::string("scorer") + path + ": " + last_error + " after " +
                                 std::to_string(attempts) + " attempts");
  }
  throw TransportError(std::string(label) + path + ": " + last_error, attempts);
}

json HttpBackend::get(Endpoint ep, const std::string& path) {
  const Target* target = ep == Endpoint::llm ? llm_.get() : scorer_.get();
  if (target == nullptr) throw ScorerUnavailableError("no scorer URL configured");
  SemaphoreGuard guard(in_flight_);
  httplib::Client cli(target->host);
  cli.set_connection_timeout(std::chrono::seconds(10));
  auto res = cli.Get(target->prefix + path);
  if (!res || res->status != 200) {
    throw ScorerUnavailableError("scorer" + path + ": " +
                                 (res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error())));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProtocolError("scorer" + path + ": malformed JSON response: " + e.what());
  }
}

GenerationResult HttpBackend::generate(const GenerationRequest& req) {
  validate(req);
  const json body{{"prompt", req.prompt},
                  {"beam_size", req.beam_size},
                  {"max_new_tokens", req.max_new_tokens},
                  {"stop", req.stop_sequences}};
  const auto start = std::chrono::steady_clock::now();
  const auto resp = post(Endpoint::llm, "/generate", body);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  GenerationResult out;
  out.text = truncate_at_stop(field<std::string>(resp, "text", "/generate"), req.stop_sequences);
  out.tokens_generated = field<std::size_t>(resp, "tokens", "/generate");
  out.wall_time_s = elapsed;
  return out;
}

ScoreResult HttpBackend::score_loglikelihood(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("score_loglikelihood: empty text");
  const auto resp = post(Endpoint::llm, "/score", json{{"text_to_score", text}});
  ScoreResult out{field<double>(resp, "logprob", "/score"), field<std::size_t>(resp, "tokens", "/score")};
  if (out.token_count == 0) throw ProtocolError("/score: token count is 0");
  return out;
}

EmbeddingVector HttpBackend::embed(const std::string& text, const LangCode& lang) {
  if (text.empty()) throw std::invalid_argument("embed: empty text");
  const auto resp = post(Endpoint::scorer, "/embed", json{{"text", text}, {"lang", lang.str()}});
  EmbeddingVector v{field<std::vector<double>>(resp, "vector", "/embed")};
  dims_.check(v.dim(), "/embed");
  return v;
}

double HttpBackend::qe_score(const std::string& src, const std::string& hyp) {
  if (src.empty() || hyp.empty()) throw std::invalid_argument("qe_score: empty text");
  return field<double>(post(Endpoint::scorer, "/qe", json{{"src", src}, {"hyp", hyp}}), "score", "/qe");
}

double HttpBackend::comet_score(const std::string& src, const std::string& hyp, const std::string& ref) {
  if (src.empty() || ref.empty()) throw std::invalid_argument("comet_score: empty text");
  return field<double>(post(Endpoint::scorer, "/comet", json{{"src", src}, {"hyp", hyp}, {"ref", ref}}), "score",
                       "/comet");
}

json HttpBackend::health() {
  auto resp = get(Endpoint::scorer, "/health");
  dims_.check(field<std::size_t>(resp, "dim", "/health"), "/health");
  if (!resp.contains("models") || !resp["models"].is_object()) {
    throw ProtocolError("/health: response lacks \"models\" object");
  }
  return resp;
}

std::size_t HttpBackend::embedding_dim() const { return dims_.dim().value_or(0); }

}  // namespace mtprompt
