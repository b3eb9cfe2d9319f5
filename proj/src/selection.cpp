#include "mtprompt/selection.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mtprompt/errors.hpp"
#include "mtprompt/features.hpp"
#include "mtprompt/hash.hpp"
#include "mtprompt/rng.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

using json = nlohmann::json;

Ordering parse_ordering(std::string_view text) {
  if (text == "ascending_score" || text == "ascending") return Ordering::ascending_score;
  if (text == "pool_order" || text == "pool") return Ordering::pool_order;
  throw std::invalid_argument("unknown ordering '" + std::string(text) + "'");
}

namespace {

void check_params(const SelectionParams& p) {
  if (p.k < 1) throw std::invalid_argument("selection: k must be >= 1");
  if (p.min_tokens >= p.max_tokens) throw std::invalid_argument("selection: min_tokens must be < max_tokens");
}

// Descending by value, ties by ascending id.
struct RankedBefore {
  bool operator()(const std::pair<double, const ParallelExample*>& a,
                  const std::pair<double, const ParallelExample*>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  }
};

using Ranked = std::vector<std::pair<double, const ParallelExample*>>;

Ranked rank(const std::vector<const ParallelExample*>& examples, const std::map<std::string, double>& values,
            std::string_view what) {
  Ranked out;
  out.reserve(examples.size());
  for (const auto* ex : examples) {
    const auto it = values.find(ex->id);
    if (it == values.end()) {
      throw std::invalid_argument(std::string(what) + ": no feature value for example '" + ex->id + "'");
    }
    out.emplace_back(it->second, ex);
  }
  std::sort(out.begin(), out.end(), RankedBefore{});
  return out;
}

}  // namespace

std::vector<ParallelExample> length_filter(const ExamplePool& pool, const SelectionParams& params) {
  std::vector<ParallelExample> out;
  for (const auto& ex : pool.examples()) {
    const auto s = token_count(ex.source_text, ex.pair.src());
    const auto t = token_count(ex.target_text, ex.pair.tgt());
    if (s >= params.min_tokens && s <= params.max_tokens && t >= params.min_tokens && t <= params.max_tokens) {
      out.push_back(ex);
    }
  }
  return out;
}

Demonstration select_random(const ExamplePool& pool, const SelectionParams& params) {
  check_params(params);
  const auto survivors = length_filter(pool, params);
  if (survivors.size() < params.k) {
    throw std::invalid_argument("select_random: only " + std::to_string(survivors.size()) +
                                " examples survive the length filter, need " + std::to_string(params.k));
  }
  Rng rng(params.seed);
  Demonstration demo{{}, pool.pair()};
  for (auto i : rng.sample_indices(survivors.size(), params.k)) demo.examples.push_back(survivors[i]);
  return demo;
}

Demonstration order_demonstration(const std::vector<ParallelExample>& examples, const std::vector<double>& scores,
                                  Ordering ordering) {
  if (examples.size() != scores.size()) {
    throw std::invalid_argument("order_demonstration: " + std::to_string(examples.size()) + " examples vs " +
                                std::to_string(scores.size()) + " scores");
  }
  if (examples.empty()) throw std::invalid_argument("order_demonstration: no examples");
  Demonstration demo{{}, examples.front().pair};
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (ordering == Ordering::ascending_score) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] < scores[b];
      return examples[a].id < examples[b].id;
    });
  }
  for (auto i : idx) demo.examples.push_back(examples[i]);
  return demo;
}

Demonstration select_topk_by_feature(const ExamplePool& pool, const std::map<std::string, double>& feature_values,
                                     const SelectionParams& params) {
  check_params(params);
  const auto survivors = length_filter(pool, params);
  if (survivors.size() < params.k) {
    throw std::invalid_argument("select_topk_by_feature: only " + std::to_string(survivors.size()) +
                                " examples survive the length filter, need " + std::to_string(params.k));
  }
  std::vector<const ParallelExample*> ptrs;
  for (const auto& ex : survivors) ptrs.push_back(&ex);
  auto ranked = rank(ptrs, feature_values, "select_topk_by_feature");
  ranked.resize(params.k);

  std::vector<ParallelExample> chosen;
  std::vector<double> scores;
  if (params.ordering == Ordering::pool_order) {
    // Back to pool order.
    for (const auto& ex : survivors) {
      for (const auto& [v, p] : ranked) {
        if (p->id == ex.id) {
          chosen.push_back(ex);
          scores.push_back(v);
        }
      }
    }
  } else {
    for (const auto& [v, p] : ranked) {
      chosen.push_back(*p);
      scores.push_back(v);
    }
  }
  auto demo = order_demonstration(chosen, scores, params.ordering);
  demo.prompt_pair = pool.pair();
  return demo;
}

// ---------------------------------------------------------------------------

void CombinedParams::validate() const {
  if (sem_keep == 0) throw std::invalid_argument("CombinedParams: sem_keep must be >= 1");
  if (sem_drop >= sem_keep) throw std::invalid_argument("CombinedParams: sem_drop must be < sem_keep");
  if (lm_keep == 0) throw std::invalid_argument("CombinedParams: lm_keep must be >= 1");
  if (lm_keep > sem_keep - sem_drop) throw std::invalid_argument("CombinedParams: lm_keep must be <= sem_keep - sem_drop");
  if (scaling == StageScaling::proportional && reference_pool_size == 0) {
    throw std::invalid_argument("CombinedParams: reference_pool_size must be >= 1");
  }
}

CombinedStages combined_stages(std::size_t pool_size, const CombinedParams& params) {
  params.validate();
  if (pool_size == 0) throw std::invalid_argument("combined_stages: empty pool");
  auto scaled = [&](std::size_t c) -> std::size_t {
    if (params.scaling == StageScaling::clamp_only || c == 0) return c;
    const auto r = params.reference_pool_size;
    const std::size_t prop = (c * pool_size + r - 1) / r;
    return std::min(c, std::max<std::size_t>(1, prop));
  };
  CombinedStages s;
  s.sem_keep = std::min(scaled(params.sem_keep), pool_size);
  s.sem_drop = std::min(scaled(params.sem_drop), s.sem_keep - 1);
  s.lm_keep = std::min(scaled(params.lm_keep), s.sem_keep - s.sem_drop);
  return s;
}

Demonstration select_combined(const ExamplePool& pool, const std::map<std::string, double>& sem_values,
                              const std::map<std::string, double>& lm_values,
                              const std::map<std::string, double>& tlen_values, std::size_t k,
                              const CombinedParams& params) {
  if (pool.empty()) throw std::invalid_argument("select_combined: empty pool");
  if (k < 1) throw std::invalid_argument("select_combined: k must be >= 1");
  const auto stages = combined_stages(pool.size(), params);

  std::vector<const ParallelExample*> current;
  for (const auto& ex : pool.examples()) current.push_back(&ex);
  // Totality is checked up front so a missing value fails regardless of stage.
  rank(current, lm_values, "select_combined (LMScore)");
  rank(current, tlen_values, "select_combined (TLength)");

  auto by_sem = rank(current, sem_values, "select_combined (SemScore)");
  current.clear();
  for (std::size_t i = stages.sem_drop; i < stages.sem_keep; ++i) current.push_back(by_sem[i].second);

  auto by_lm = rank(current, lm_values, "select_combined (LMScore)");
  current.clear();
  for (std::size_t i = 0; i < stages.lm_keep; ++i) current.push_back(by_lm[i].second);

  if (k > current.size()) {
    throw std::invalid_argument("select_combined: k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(current.size()) + " examples left after the LMScore stage");
  }
  auto by_tlen = rank(current, tlen_values, "select_combined (TLength)");
  Demonstration demo{{}, pool.pair()};
  for (std::size_t i = 0; i < k; ++i) demo.examples.push_back(*by_tlen[i].second);
  return demo;
}

// ---------------------------------------------------------------------------

void write_demonstration_jsonl(std::ostream& out, const Demonstration& demo) {
  for (const auto& ex : demo.examples) {
    out << json{{"id", ex.id}, {"src", ex.source_text}, {"tgt", ex.target_text}, {"pair", ex.pair.str()}}.dump()
        << '\n';
  }
}

Demonstration read_demonstration_jsonl(std::istream& in) {
  std::vector<ParallelExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (text::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      examples.push_back({j.at("id").get<std::string>(), j.at("src").get<std::string>(),
                          j.at("tgt").get<std::string>(), LanguagePair::parse(j.at("pair").get<std::string>())});
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad demonstration record: ") + e.what(), line_no);
    }
  }
  if (examples.empty()) throw ParseError("empty demonstration", 0);
  Demonstration demo{{}, examples.front().pair};
  demo.examples = std::move(examples);
  return demo;
}

std::string demonstration_hash(const Demonstration& demo) {
  std::ostringstream ss;
  ss << demo.prompt_pair.str() << '\n';
  write_demonstration_jsonl(ss, demo);
  return sha256_hex(ss.str());
}

}  // namespace mtprompt
