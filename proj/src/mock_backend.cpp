#include "mtprompt/mock_backend.hpp"

#include <cstdint>
#include <unordered_map>

#include "mtprompt/errors.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

MockBackend& MockBackend::set_prompt_match(PromptMatch m) {
  match_ = m;
  return *this;
}

MockBackend& MockBackend::add_generation(std::string prompt, std::string continuation) {
  generations_[std::move(prompt)] = std::move(continuation);
  return *this;
}

MockBackend& MockBackend::set_generate_fn(GenerateFn fn) {
  generate_fn_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::set_seconds_per_token(double s) {
  seconds_per_token_ = s;
  return *this;
}

MockBackend& MockBackend::add_score(std::string text, ScoreResult result) {
  scores_[std::move(text)] = result;
  return *this;
}

MockBackend& MockBackend::set_fixed_score(ScoreResult result) {
  fixed_score_ = result;
  return *this;
}

MockBackend& MockBackend::set_score_fn(ScoreFn fn) {
  score_fn_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::set_max_context_bytes(std::size_t n) {
  max_context_bytes_ = n;
  return *this;
}

MockBackend& MockBackend::set_embed_fn(EmbedFn fn) {
  embed_fn_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::set_embedding_dim(std::size_t dim) {
  embedding_dim_ = dim;
  return *this;
}

MockBackend& MockBackend::set_qe_constant(double value) {
  qe_constant_ = value;
  return *this;
}

MockBackend& MockBackend::set_qe_fn(QeFn fn) {
  qe_fn_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::set_qe_available(bool available) {
  qe_available_ = available;
  return *this;
}

MockBackend& MockBackend::set_comet_echo(double max_value) {
  comet_echo_max_ = max_value;
  return *this;
}

MockBackend& MockBackend::set_comet_fn(CometFn fn) {
  comet_fn_ = std::move(fn);
  return *this;
}

MockBackend& MockBackend::set_comet_available(bool available) {
  comet_available_ = available;
  return *this;
}

void MockBackend::reset_counters() {
  generate_calls_ = 0;
  score_calls_ = 0;
  embed_calls_ = 0;
  qe_calls_ = 0;
  comet_calls_ = 0;
}

std::optional<std::string> MockBackend::lookup_generation(const std::string& prompt) const {
  if (match_ == PromptMatch::exact) {
    if (const auto it = generations_.find(prompt); it != generations_.end()) return it->second;
  } else {
    const std::string* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, value] : generations_) {
      if (prompt.ends_with(key) && (best == nullptr || key.size() > best_len)) {
        best = &value;
        best_len = key.size();
      }
    }
    if (best) return *best;
  }
  if (generate_fn_) return generate_fn_(prompt);
  return std::nullopt;
}

GenerationResult MockBackend::generate(const GenerationRequest& req) {
  ++generate_calls_;
  validate(req);
  auto continuation = lookup_generation(req.prompt);
  if (!continuation) {
    if (strict_) throw MockMissError("mock: no generation for prompt \"" + req.prompt + "\"");
    continuation = std::string();
  }
  GenerationResult out;
  out.text = truncate_at_stop(*continuation, req.stop_sequences);
  out.tokens_generated = text::split_whitespace(out.text).size();
  if (out.tokens_generated == 0 && !out.text.empty()) out.tokens_generated = 1;
  out.wall_time_s = seconds_per_token_ * static_cast<double>(out.tokens_generated);
  return out;
}

ScoreResult MockBackend::score_loglikelihood(const std::string& text) {
  ++score_calls_;
  if (text.empty()) throw std::invalid_argument("score_loglikelihood: empty text");
  if (max_context_bytes_ && text.size() > *max_context_bytes_) {
    throw ContextOverflowError("mock: text of " + std::to_string(text.size()) + " bytes exceeds context of " +
                               std::to_string(*max_context_bytes_));
  }
  if (const auto it = scores_.find(text); it != scores_.end()) return it->second;
  if (score_fn_) {
    if (auto r = score_fn_(text)) return *r;
  }
  if (fixed_score_) return *fixed_score_;
  if (strict_) throw MockMissError("mock: no score for \"" + text + "\"");
  const auto n = std::max<std::size_t>(1, text::split_whitespace(text).size());
  return {-1.0 * static_cast<double>(n), n};
}

EmbeddingVector MockBackend::embed(const std::string& text, const LangCode& lang) {
  ++embed_calls_;
  if (text.empty()) throw std::invalid_argument("embed: empty text");
  auto v = embed_fn_ ? embed_fn_(text, lang) : hash_basis_embedding(text, lang, embedding_dim_);
  dims_.check(v.dim(), "mock embed");
  return v;
}

double MockBackend::qe_score(const std::string& src, const std::string& hyp) {
  ++qe_calls_;
  if (src.empty() || hyp.empty()) throw std::invalid_argument("qe_score: empty text");
  if (!qe_available_) throw ScorerUnavailableError("mock: QE scorer unavailable");
  if (qe_fn_) return qe_fn_(src, hyp);
  if (qe_constant_) return *qe_constant_;
  if (strict_) throw MockMissError("mock: no QE scorer configured");
  return 0.0;
}

double MockBackend::comet_score(const std::string& src, const std::string& hyp, const std::string& ref) {
  ++comet_calls_;
  if (src.empty() || ref.empty()) throw std::invalid_argument("comet_score: empty text");
  if (!comet_available_) throw ScorerUnavailableError("mock: COMET scorer unavailable");
  if (comet_fn_) return comet_fn_(src, hyp, ref);
  if (comet_echo_max_) {
    return hyp == ref ? *comet_echo_max_ : *comet_echo_max_ * token_overlap(hyp, ref);
  }
  if (strict_) throw MockMissError("mock: no COMET scorer configured");
  return 0.0;
}

EmbeddingVector MockBackend::hash_basis_embedding(const std::string& text, const LangCode& lang,
                                                  std::size_t dim) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(lang.str());
  mix("\t");
  mix(text);
  EmbeddingVector v;
  v.values.assign(dim, 0.0);
  v.values[h % dim] = 1.0;
  return v;
}

double MockBackend::token_overlap(const std::string& hyp, const std::string& ref) {
  const auto h = text::split_whitespace(hyp);
  const auto r = text::split_whitespace(ref);
  if (h.empty() || r.empty()) return h.empty() && r.empty() ? 1.0 : 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : r) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : h) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(h.size() + r.size());
}

}  // namespace mtprompt
