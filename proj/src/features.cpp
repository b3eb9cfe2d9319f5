#include "mtprompt/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mtprompt/errors.hpp"
#include "mtprompt/parallel.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

std::string_view to_string(FeatureName f) {
  switch (f) {
    case FeatureName::slength: return "slength";
    case FeatureName::tlength: return "tlength";
    case FeatureName::lm_score: return "lm_score";
    case FeatureName::mt_score: return "mt_score";
    case FeatureName::sem_score: return "sem_score";
    case FeatureName::case_sem_src: return "case_sem_src";
    case FeatureName::case_sem_tgt: return "case_sem_tgt";
  }
  return "?";
}

FeatureName parse_feature_name(std::string_view text) {
  for (auto f : kAllFeatures) {
    if (to_string(f) == text) return f;
  }
  throw std::invalid_argument("unknown feature '" + std::string(text) + "'");
}

std::optional<double> feature_value(const FeatureVector& v, FeatureName f) {
  switch (f) {
    case FeatureName::slength: return static_cast<double>(v.slength);
    case FeatureName::tlength: return static_cast<double>(v.tlength);
    case FeatureName::lm_score: return v.lm_score;
    case FeatureName::mt_score: return v.mt_score;
    case FeatureName::sem_score: return v.sem_score;
    case FeatureName::case_sem_src: return v.case_sem_src;
    case FeatureName::case_sem_tgt: return v.case_sem_tgt;
  }
  return std::nullopt;
}

std::size_t token_count(std::string_view s, const LangCode& lang) {
  if (s.empty()) throw std::invalid_argument("token_count: empty text");
  if (lang.str() == "zh" || lang.str() == "ja") {
    const auto cps = text::decode_utf8(s);
    return static_cast<std::size_t>(
        std::count_if(cps.begin(), cps.end(), [](char32_t c) { return !text::is_unicode_space(c); }));
  }
  return text::split_whitespace(s).size();
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw ProtocolError("cosine: dimension mismatch " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedSimilarityError("cosine: zero-norm embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double lm_score(const ParallelExample& example, const PromptTemplate& t, const PromptRenderer& renderer,
                Backend& backend) {
  const auto r = backend.score_loglikelihood(renderer.render_completed(t, example));
  if (r.token_count == 0) throw ProtocolError("lm_score: backend reported 0 tokens");
  return r.total_logprob / static_cast<double>(r.token_count);
}

double sem_score(const ParallelExample& example, Backend& backend) {
  return cosine(backend.embed(example.source_text, example.pair.src()),
                backend.embed(example.target_text, example.pair.tgt()));
}

std::optional<double> mt_score(const ParallelExample& example, Backend& backend) {
  try {
    return backend.qe_score(example.source_text, example.target_text);
  } catch (const ScorerUnavailableError&) {
    return std::nullopt;
  }
}

namespace {

EmbeddingVector embed_side(const ParallelExample& example, ExampleSide side, Backend& backend) {
  return side == ExampleSide::src ? backend.embed(example.source_text, example.pair.src())
                                  : backend.embed(example.target_text, example.pair.tgt());
}

double mean_cosine(const EmbeddingVector& v, const std::vector<EmbeddingVector>& tests) {
  double sum = 0.0;
  for (const auto& t : tests) sum += cosine(t, v);
  return sum / static_cast<double>(tests.size());
}

}  // namespace

double case_sem(const ParallelExample& example, const TestInputs& test_inputs, ExampleSide side, Backend& backend) {
  if (test_inputs.texts.empty()) throw std::invalid_argument("case_sem: no test inputs");
  std::vector<EmbeddingVector> tests;
  tests.reserve(test_inputs.texts.size());
  for (const auto& t : test_inputs.texts) tests.push_back(backend.embed(t, test_inputs.lang));
  return mean_cosine(embed_side(example, side, backend), tests);
}

FeatureExtractor::FeatureExtractor(Backend& backend, PromptRenderer renderer, PromptTemplate lm_template)
    : backend_(backend), renderer_(std::move(renderer)), lm_template_(lm_template) {}

const std::vector<EmbeddingVector>& FeatureExtractor::test_embeddings(const TestInputs& inputs) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(inputs.lang.str(), inputs.texts);
  auto it = test_cache_.find(key);
  if (it == test_cache_.end()) {
    std::vector<EmbeddingVector> v;
    v.reserve(inputs.texts.size());
    for (const auto& t : inputs.texts) v.push_back(backend_.embed(t, inputs.lang));
    it = test_cache_.emplace(std::move(key), std::move(v)).first;
  }
  return it->second;
}

FeatureVector FeatureExtractor::compute_all(const ParallelExample& example, const TestInputs& test_inputs) {
  FeatureVector v;
  v.slength = token_count(example.source_text, example.pair.src());
  v.tlength = token_count(example.target_text, example.pair.tgt());
  v.lm_score = lm_score(example, lm_template_, renderer_, backend_);
  v.mt_score = mt_score(example, backend_);
  const auto src = backend_.embed(example.source_text, example.pair.src());
  const auto tgt = backend_.embed(example.target_text, example.pair.tgt());
  v.sem_score = cosine(src, tgt);
  if (!test_inputs.texts.empty()) {
    const auto& tests = test_embeddings(test_inputs);
    v.case_sem_src = mean_cosine(src, tests);
    v.case_sem_tgt = mean_cosine(tgt, tests);
  }
  return v;
}

std::vector<FeatureVector> FeatureExtractor::compute_pool(const std::vector<ParallelExample>& examples,
                                                          const TestInputs& test_inputs, std::size_t jobs) {
  if (!test_inputs.texts.empty()) test_embeddings(test_inputs);
  return parallel_map(examples.size(), jobs, [&](std::size_t i) { return compute_all(examples[i], test_inputs); });
}

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::optional<double> parse_cell(std::string_view s, std::size_t line_no) {
  if (s == "NA") return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'", line_no);
  }
  return v;
}

}  // namespace

void write_feature_tsv(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<FeatureVector>& features) {
  if (ids.size() != features.size()) throw std::invalid_argument("write_feature_tsv: ids/features mismatch");
  out << "id";
  for (auto f : kAllFeatures) out << '\t' << to_string(f);
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (auto f : kAllFeatures) out << '\t' << cell(feature_value(features[i], f));
    out << '\n';
  }
}

FeatureTable read_feature_tsv(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!text::read_line(in, line)) throw ParseError("feature table is empty", 0);
  ++line_no;
  const auto header = text::split(line, '\t');
  if (header.size() != 1 + std::size(kAllFeatures) || header[0] != "id") {
    throw ParseError("unexpected feature table header", line_no);
  }
  std::vector<FeatureName> columns;
  for (std::size_t c = 1; c < header.size(); ++c) columns.push_back(parse_feature_name(header[c]));
  while (text::read_line(in, line)) {
    ++line_no;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 1 + columns.size()) throw ParseError("wrong column count", line_no);
    FeatureVector v;
    std::map<FeatureName, std::optional<double>> values;
    for (std::size_t c = 1; c < cols.size(); ++c) {
      values[columns[c - 1]] = parse_cell(cols[c], line_no);
    }
    auto required = [&](FeatureName f) {
      const auto& val = values[f];
      if (!val) throw ParseError(std::string(to_string(f)) + " may not be NA", line_no);
      return *val;
    };
    v.slength = static_cast<std::size_t>(required(FeatureName::slength));
    v.tlength = static_cast<std::size_t>(required(FeatureName::tlength));
    v.lm_score = required(FeatureName::lm_score);
    v.mt_score = values[FeatureName::mt_score];
    v.sem_score = required(FeatureName::sem_score);
    v.case_sem_src = values[FeatureName::case_sem_src];
    v.case_sem_tgt = values[FeatureName::case_sem_tgt];
    table.ids.emplace_back(cols[0]);
    table.features.push_back(v);
  }
  return table;
}

std::map<std::string, double> FeatureTable::column(FeatureName f) const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (auto v = feature_value(features[i], f)) out[ids[i]] = *v;
  }
  return out;
}

}  // namespace mtprompt
