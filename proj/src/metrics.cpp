#include "mtprompt/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "mtprompt/backend.hpp"
#include "mtprompt/errors.hpp"
#include "mtprompt/parallel.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_13a_punct(unsigned char c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// The shared regexp post-tokenizer. Each pass mirrors one re.sub with
// non-overlapping left-to-right matching; working on bytes gives the same
// result as on code points because every pattern anchors on ASCII.
std::string regexp_post_tokenize(std::string_view line) {
  std::string a;
  a.reserve(line.size() * 2);
  for (char c : line) {
    if (is_13a_punct(static_cast<unsigned char>(c))) {
      a += ' ';
      a += c;
      a += ' ';
    } else {
      a += c;
    }
  }
  // ([^0-9])([\.,]) -> "\1 \2 "
  std::string b;
  b.reserve(a.size() * 2);
  for (std::size_t i = 0; i < a.size();) {
    if (i + 1 < a.size() && !is_digit(a[i]) && (a[i + 1] == '.' || a[i + 1] == ',')) {
      b += a[i];
      b += ' ';
      b += a[i + 1];
      b += ' ';
      i += 2;
    } else {
      b += a[i++];
    }
  }
  // ([\.,])([^0-9]) -> " \1 \2"
  std::string c;
  c.reserve(b.size() * 2);
  for (std::size_t i = 0; i < b.size();) {
    if (i + 1 < b.size() && (b[i] == '.' || b[i] == ',') && !is_digit(b[i + 1])) {
      c += ' ';
      c += b[i];
      c += ' ';
      c += b[i + 1];
      i += 2;
    } else {
      c += b[i++];
    }
  }
  // ([0-9])(-) -> "\1 \2 "
  std::string d;
  d.reserve(c.size() * 2);
  for (std::size_t i = 0; i < c.size();) {
    if (i + 1 < c.size() && is_digit(c[i]) && c[i + 1] == '-') {
      d += c[i];
      d += " - ";
      i += 2;
    } else {
      d += c[i++];
    }
  }
  std::string out;
  for (const auto& tok : text::split_whitespace(d)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

// Code-point ranges SacreBLEU treats as Chinese characters. Two entries in its
// table are written as 5-hex-digit \u escapes, which Python reads as a 4-digit
// escape plus a literal digit; as string comparisons they cover U+2001..U+2A6D
// and U+2F81..U+2FA1, and that is what is reproduced here.
constexpr std::pair<char32_t, char32_t> kChineseRanges[] = {
    {0x3400, 0x4DB5}, {0x4E00, 0x9FA5}, {0x9FA6, 0x9FBB}, {0xF900, 0xFA2D}, {0xFA30, 0xFA6A},
    {0xFA70, 0xFAD9}, {0x2001, 0x2A6D}, {0x2F81, 0x2FA1}, {0xFF00, 0xFFEF}, {0x2E80, 0x2EFF},
    {0x3000, 0x303F}, {0x31C0, 0x31EF}, {0x2F00, 0x2FDF}, {0x2FF0, 0x2FFF}, {0x3100, 0x312F},
    {0x31A0, 0x31BF}, {0xFE10, 0xFE1F}, {0xFE30, 0xFE4F}, {0x2600, 0x26FF}, {0x2700, 0x27BF},
    {0x3200, 0x32FF}, {0x3300, 0x33FF},
};

bool is_chinese_char(char32_t cp) {
  return std::any_of(std::begin(kChineseRanges), std::end(kChineseRanges),
                     [cp](const auto& r) { return cp >= r.first && cp <= r.second; });
}

}  // namespace

std::string tokenize_13a(std::string_view line) {
  std::string s(line);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  return regexp_post_tokenize(" " + s + " ");
}

std::string tokenize_zh(std::string_view line) {
  std::string spaced;
  for (char32_t cp : text::decode_utf8(text::trim(line))) {
    if (is_chinese_char(cp)) {
      spaced += ' ';
      text::append_utf8(spaced, cp);
      spaced += ' ';
    } else {
      text::append_utf8(spaced, cp);
    }
  }
  return regexp_post_tokenize(spaced);
}

std::string tokenize(std::string_view line, BleuTokenizer tok) {
  return tok == BleuTokenizer::zh_character ? tokenize_zh(line) : tokenize_13a(line);
}

// ---------------------------------------------------------------------------
// BLEU

std::string BleuConfig::signature() const {
  return std::string("nrefs:1|case:mixed|eff:no|tok:") +
         (tokenizer == BleuTokenizer::zh_character ? "zh" : "13a") +
         "|smooth:" + (smoothing == BleuSmoothing::none ? "none" : "exp") + "|ngram:" + std::to_string(max_ngram);
}

BleuConfig BleuConfig::for_target(const LangCode& lang) {
  BleuConfig cfg;
  if (lang.str() == "zh") cfg.tokenizer = BleuTokenizer::zh_character;
  return cfg;
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string_view>& toks, int max_n) {
  NgramCounts counts;
  for (int n = 1; n <= max_n; ++n) {
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      ++counts[std::vector<std::string_view>(toks.begin() + i, toks.begin() + i + n)];
    }
  }
  return counts;
}

std::vector<std::string_view> split_spaces(const std::string& s) {
  std::vector<std::string_view> out;
  for (auto part : text::split(s, ' ')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

double floored_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

}  // namespace

BleuScore corpus_bleu_detail(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                             const BleuConfig& cfg) {
  if (hyps.size() != refs.size()) {
    throw std::invalid_argument("corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                                std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");
  if (cfg.max_ngram < 1) throw std::invalid_argument("corpus_bleu: max_ngram must be >= 1");
  const auto max_n = static_cast<std::size_t>(cfg.max_ngram);

  BleuScore s;
  s.correct.assign(max_n, 0);
  s.total.assign(max_n, 0);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto hyp_tok = tokenize(text::rtrim(hyps[i]), cfg.tokenizer);
    const auto ref_tok = tokenize(text::rtrim(refs[i]), cfg.tokenizer);
    const auto h = split_spaces(hyp_tok);
    const auto r = split_spaces(ref_tok);
    s.sys_len += h.size();
    s.ref_len += r.size();
    const auto hc = count_ngrams(h, cfg.max_ngram);
    const auto rc = count_ngrams(r, cfg.max_ngram);
    for (const auto& [gram, n] : hc) {
      const auto it = rc.find(gram);
      if (it != rc.end()) s.correct[gram.size() - 1] += std::min(n, it->second);
    }
    for (std::size_t n = 1; n <= max_n; ++n) {
      if (h.size() >= n) s.total[n - 1] += h.size() - n + 1;
    }
  }

  s.brevity_penalty = 1.0;
  if (s.sys_len < s.ref_len) {
    s.brevity_penalty =
        s.sys_len > 0 ? std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.sys_len)) : 0.0;
  }
  if (std::all_of(s.correct.begin(), s.correct.end(), [](std::size_t c) { return c == 0; })) {
    s.score = 0.0;
    return s;
  }
  std::vector<double> precisions(max_n, 0.0);
  double smooth_mteval = 1.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (s.total[n - 1] == 0) break;
    if (s.correct[n - 1] == 0) {
      if (cfg.smoothing == BleuSmoothing::exp) {
        smooth_mteval *= 2;
        precisions[n - 1] = 100.0 / (smooth_mteval * static_cast<double>(s.total[n - 1]));
      }
    } else {
      precisions[n - 1] = 100.0 * static_cast<double>(s.correct[n - 1]) / static_cast<double>(s.total[n - 1]);
    }
  }
  double log_sum = 0.0;
  for (double p : precisions) log_sum += floored_log(p);
  s.score = s.brevity_penalty * std::exp(log_sum / static_cast<double>(max_n));
  return s;
}

double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   const BleuConfig& cfg) {
  return corpus_bleu_detail(hyps, refs, cfg).score;
}

double doc_bleu(const std::vector<DocumentTranslation>& docs, const BleuConfig& cfg) {
  const std::string_view joiner = cfg.tokenizer == BleuTokenizer::zh_character ? "" : " ";
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (doc.hyps.size() != doc.refs.size()) {
      throw std::invalid_argument("doc_bleu: document " + std::to_string(d) + " has " +
                                  std::to_string(doc.hyps.size()) + " hypotheses vs " +
                                  std::to_string(doc.refs.size()) + " references");
    }
    auto join = [joiner](const std::vector<std::string>& v) {
      std::string out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += joiner;
        out += v[i];
      }
      return out;
    };
    hyps.push_back(join(doc.hyps));
    refs.push_back(join(doc.refs));
  }
  return corpus_bleu(hyps, refs, cfg);
}

// ---------------------------------------------------------------------------
// Correlation

std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank mean((i+1)..(j+1))
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("pearson: size mismatch or empty input");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                                " values");
  }
  if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  CorrelationResult out;
  out.n = x.size();
  out.rho = pearson(rx, ry);
  const double df = static_cast<double>(out.n) - 2.0;
  const double denom = 1.0 - out.rho * out.rho;
  if (denom <= 0.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.rho * std::sqrt(df / denom);
    const boost::math::students_t dist(df);
    out.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
  }
  return out;
}

double spearman_permutation_p(std::span<const double> x, std::span<const double> y) {
  const auto n = x.size();
  if (n != y.size() || n < 3 || n > 10) throw std::invalid_argument("spearman_permutation_p: need 3 <= n <= 10");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double observed = std::fabs(pearson(rx, ry));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t extreme = 0;
  std::size_t count = 0;
  std::vector<double> permuted(n);
  do {
    for (std::size_t i = 0; i < n; ++i) permuted[i] = ry[perm[i]];
    if (std::fabs(pearson(rx, permuted)) >= observed - 1e-12) ++extreme;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(extreme) / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

CometBatchResult comet_batch(const std::vector<std::string>& srcs, const std::vector<std::string>& hyps,
                             const std::vector<std::string>& refs, Backend& backend, std::size_t jobs) {
  if (srcs.size() != hyps.size() || hyps.size() != refs.size()) {
    throw std::invalid_argument("comet_batch: misaligned inputs");
  }
  CometBatchResult out;
  if (srcs.empty()) return out;
  try {
    out.segments =
        parallel_map(srcs.size(), jobs, [&](std::size_t i) { return backend.comet_score(srcs[i], hyps[i], refs[i]); });
  } catch (const ScorerUnavailableError& e) {
    out.segments.clear();
    out.warning = std::string("COMET missing: ") + e.what();
    spdlog::warn("{}", out.warning);
    return out;
  }
  out.mean = mean(out.segments);
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

}  // namespace mtprompt
