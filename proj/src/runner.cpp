#include "mtprompt/runner.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mtprompt/augment.hpp"
#include "mtprompt/errors.hpp"
#include "mtprompt/features.hpp"
#include "mtprompt/hash.hpp"
#include "mtprompt/http_backend.hpp"
#include "mtprompt/metrics.hpp"
#include "mtprompt/parallel.hpp"
#include "mtprompt/rng.hpp"
#include "mtprompt/selection.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool unspaced_script(const LangCode& lang) { return lang.str() == "zh" || lang.str() == "ja"; }

std::string join_sentences(const std::vector<std::string>& parts, const LangCode& lang) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0 && !unspaced_script(lang)) out += ' ';
    out += parts[i];
  }
  return out;
}

std::vector<ParallelExample> document_units(const DocumentCorpus& corpus, const LanguagePair& pair) {
  std::vector<ParallelExample> out;
  for (const auto& doc : corpus.documents) {
    std::vector<std::string> src, tgt;
    for (const auto& s : doc.sentences) {
      src.push_back(s.source_text);
      tgt.push_back(s.target_text);
    }
    out.push_back({doc.doc_id, join_sentences(src, pair.src()), join_sentences(tgt, pair.tgt()), pair});
  }
  return out;
}

/// A rendered demonstration applied to a test set.
struct PromptSet {
  std::vector<std::string> prompts;
  std::string demo_hash;
  /// Serialized demonstration, persisted under demos/<hash>.jsonl.
  std::string demo_jsonl;
};

/// Shared state of one run: renderer, caches and persisted artifacts.
class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts)
      : cfg_(cfg), backend_(backend), opts_(opts), renderer_(load_language_table(cfg)) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  Backend& backend() { return backend_; }
  const PromptRenderer& renderer() const { return renderer_; }

  void note(std::string text) {
    if (noted_.insert(text).second) {
      spdlog::warn("{}", text);
      notes_.push_back(std::move(text));
    }
  }
  std::vector<std::string> take_notes() { return std::move(notes_); }

  /// Feature columns of a direction's pool, read from its TSV or computed once.
  const std::map<FeatureName, std::map<std::string, double>>& pool_features(const DirectionData& d) {
    auto it = features_.find(d.spec.name);
    if (it != features_.end()) return it->second;
    std::map<FeatureName, std::map<std::string, double>> columns;
    FeatureTable table;
    if (!d.spec.features.empty()) {
      std::ifstream in(cfg_.resolve(d.spec.features));
      table = read_feature_tsv(in);
    } else {
      if (!d.pool) throw ConfigError(d.spec.name + ": no pool to compute features for");
      FeatureExtractor extractor(backend_, renderer_);
      table.ids.reserve(d.pool->size());
      for (const auto& ex : d.pool->examples()) table.ids.push_back(ex.id);
      table.features = extractor.compute_pool(d.pool->examples(), test_inputs(d), cfg_.jobs);
    }
    for (auto f : kAllFeatures) columns[f] = table.column(f);
    return features_.emplace(d.spec.name, std::move(columns)).first->second;
  }

  static TestInputs test_inputs(const DirectionData& d) {
    TestInputs in{d.spec.pair.src(), {}};
    for (const auto& ex : d.test) in.texts.push_back(ex.source_text);
    return in;
  }

  /// Generates every prompt, scores the outputs against `test` and fills in `row`.
  ScoreRow evaluate(ScoreRow row, const std::vector<ParallelExample>& test, const PromptSet& set,
                    const std::vector<std::string>& stops) {
    row.n = test.size();
    row.demo_hash = set.demo_hash;
    persist_demo(set);
    if (opts_.dry_run) {
      record(row, test, set.prompts, nullptr, "");
      row.error = "dry run";
      return row;
    }
    std::vector<GenerationResult> results;
    try {
      results = generate_all(set.prompts, stops);
    } catch (const std::exception& e) {
      row.error = e.what();
      return row;
    }
    std::vector<std::string> hyps;
    hyps.reserve(results.size());
    for (const auto& r : results) {
      hyps.push_back(r.text);
      row.tokens += r.tokens_generated;
      row.wall_time_s += r.wall_time_s;
    }
    record(row, test, set.prompts, &hyps, "");
    try {
      score(row, test, hyps);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  }

  std::vector<GenerationResult> generate_all(const std::vector<std::string>& prompts,
                                             const std::vector<std::string>& stops) {
    return parallel_map(prompts.size(), cfg_.jobs, [&](std::size_t i) {
      GenerationRequest req;
      req.prompt = prompts[i];
      req.stop_sequences = stops;
      return backend_.generate(req);
    });
  }

  void score(ScoreRow& row, const std::vector<ParallelExample>& test, const std::vector<std::string>& hyps) {
    std::vector<std::string> srcs, refs;
    for (const auto& ex : test) {
      srcs.push_back(ex.source_text);
      refs.push_back(ex.target_text);
    }
    const auto pair = test.front().pair;
    row.bleu = corpus_bleu(hyps, refs, BleuConfig::for_target(pair.tgt()));
    const auto comet = comet_batch(srcs, hyps, refs, backend_, cfg_.jobs);
    if (comet.mean) {
      row.comet = *comet.mean * 100.0;
    } else {
      note("COMET missing: " + comet.warning);
    }
  }

  /// One prompts.jsonl line per test item.
  void record(const ScoreRow& row, const std::vector<ParallelExample>& test, const std::vector<std::string>& prompts,
              const std::vector<std::string>* hyps, const std::string& hop) {
    if (cfg_.output_dir.empty()) return;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      json j{{"direction", row.direction}, {"template", row.template_desc}, {"strategy", row.strategy},
             {"k", row.k},                 {"seed", row.seed},               {"id", test[i].id},
             {"demo_hash", row.demo_hash}, {"prompt", prompts[i]}};
      if (row.sample) j["sample"] = *row.sample;
      if (!hop.empty()) j["hop"] = hop;
      if (hyps) j["output"] = (*hyps)[i];
      prompt_lines_ << j.dump() << '\n';
    }
  }

  void persist_demo(const PromptSet& set) {
    if (cfg_.output_dir.empty() || set.demo_jsonl.empty()) return;
    demos_.emplace(set.demo_hash, set.demo_jsonl);
  }

  /// Writes prompts.jsonl and demos/ under the output directory.
  void flush() {
    if (cfg_.output_dir.empty()) return;
    const auto dir = cfg_.resolve(cfg_.output_dir);
    fs::create_directories(dir / "demos");
    std::ofstream(dir / "prompts.jsonl", std::ios::binary) << prompt_lines_.str();
    for (const auto& [hash, body] : demos_) std::ofstream(dir / "demos" / (hash + ".jsonl"), std::ios::binary) << body;
  }

 private:
  const ExperimentConfig& cfg_;
  Backend& backend_;
  RunOptions opts_;
  PromptRenderer renderer_;
  std::vector<std::string> notes_;
  std::set<std::string> noted_;
  std::map<std::string, std::map<FeatureName, std::map<std::string, double>>> features_;
  std::ostringstream prompt_lines_;
  std::map<std::string, std::string> demos_;
};

PromptSet few_shot_prompts(const PromptRenderer& renderer, const PromptTemplate& t, const LanguagePair& test_pair,
                           const Demonstration& demo, const std::vector<ParallelExample>& test) {
  PromptSet set;
  for (const auto& ex : test) {
    set.prompts.push_back(demo.examples.empty() ? renderer.render_zero_shot(t, test_pair, ex.source_text)
                                                : renderer.render_few_shot(t, test_pair, demo, ex.source_text));
  }
  set.demo_hash = demonstration_hash(demo);
  std::ostringstream ss;
  write_demonstration_jsonl(ss, demo);
  set.demo_jsonl = ss.str();
  return set;
}

std::vector<MonolingualExample> load_mono(const ExperimentConfig& cfg, const fs::path& p, const LangCode& lang,
                                          const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is not configured");
  return load_monolingual(cfg.resolve(p), lang);
}

/// Demonstration for one (strategy, K, seed) cell.
PromptSet build_prompts(RunContext& ctx, const DirectionData& d, const PromptTemplate& t, const StrategySpec& s,
                        std::size_t k, std::uint64_t seed) {
  const auto& cfg = ctx.cfg();
  const auto& pair = d.spec.pair;
  const auto& renderer = ctx.renderer();
  auto need_pool = [&]() -> const ExamplePool& {
    if (!d.pool) throw ConfigError(d.spec.name + ": strategy " + s.str() + " needs a pool");
    return *d.pool;
  };
  using K = StrategySpec::Kind;
  switch (s.kind) {
    case K::zero_shot:
      return few_shot_prompts(renderer, t, pair, Demonstration{{}, pair}, d.test);
    case K::random:
      return few_shot_prompts(renderer, t, pair, select_random(need_pool(), cfg.selection(k, seed)), d.test);
    case K::topk: {
      const auto& pool = need_pool();
      const auto& cols = ctx.pool_features(d);
      return few_shot_prompts(renderer, t, pair,
                              select_topk_by_feature(pool, cols.at(s.feature), cfg.selection(k, seed)), d.test);
    }
    case K::combined: {
      const auto& pool = need_pool();
      const auto& cols = ctx.pool_features(d);
      return few_shot_prompts(renderer, t, pair,
                              select_combined(pool, cols.at(FeatureName::sem_score), cols.at(FeatureName::lm_score),
                                              cols.at(FeatureName::tlength), k, cfg.combined),
                              d.test);
    }
    case K::back_translation:
    case K::forward_translation:
    case K::random_pair: {
      const AugmentOptions aopts{PromptTemplate{}, cfg.jobs};
      const auto aug = [&] {
        if (s.kind == K::back_translation) {
          return build_back_translated(load_mono(cfg, d.spec.mono_tgt, pair.tgt(), d.spec.name + " mono_tgt"), pair,
                                       renderer, ctx.backend(), k, seed, aopts);
        }
        if (s.kind == K::forward_translation) {
          return build_forward_translated(load_mono(cfg, d.spec.mono_src, pair.src(), d.spec.name + " mono_src"),
                                          pair, renderer, ctx.backend(), k, seed, aopts);
        }
        return build_random_pairs(load_mono(cfg, d.spec.mono_src, pair.src(), d.spec.name + " mono_src"),
                                  load_mono(cfg, d.spec.mono_tgt, pair.tgt(), d.spec.name + " mono_tgt"), pair, k,
                                  seed);
      }();
      auto set = few_shot_prompts(renderer, t, pair, aug.as_demonstration(), d.test);
      std::ostringstream ss;
      write_augmented_jsonl(ss, aug);
      set.demo_jsonl = ss.str();
      set.demo_hash = sha256_hex(pair.str() + "\n" + set.demo_jsonl);
      return set;
    }
    case K::source_only:
    case K::target_only: {
      const bool src_side = s.kind == K::source_only;
      const auto mono = src_side ? load_mono(cfg, d.spec.mono_src, pair.src(), d.spec.name + " mono_src")
                                 : load_mono(cfg, d.spec.mono_tgt, pair.tgt(), d.spec.name + " mono_tgt");
      if (mono.size() < k) {
        throw std::invalid_argument("only " + std::to_string(mono.size()) + " monolingual sentences, need " +
                                    std::to_string(k));
      }
      Rng rng(seed);
      std::vector<MonolingualExample> chosen;
      for (auto i : rng.sample_indices(mono.size(), k)) chosen.push_back(mono[i]);
      PromptSet set;
      const auto mode = src_side ? OneSidedMode::source_only : OneSidedMode::target_only;
      for (const auto& ex : d.test) {
        set.prompts.push_back(renderer.render_one_sided(t, pair, chosen, mode, ex.source_text));
      }
      for (const auto& m : chosen) {
        set.demo_jsonl += json{{"id", m.id}, {"text", m.text}, {"lang", m.lang.str()}}.dump() + "\n";
      }
      set.demo_hash = sha256_hex(pair.str() + "\n" + s.str() + "\n" + set.demo_jsonl);
      return set;
    }
  }
  throw std::logic_error("unhandled strategy");
}

ScoreRow row_key(const std::string& direction, const PromptTemplate& t, const std::string& strategy, std::size_t k,
                 std::uint64_t seed) {
  ScoreRow row;
  row.direction = direction;
  row.template_desc = describe(t);
  row.strategy = strategy;
  row.k = k;
  row.seed = seed;
  return row;
}

RunReport new_report(const ExperimentConfig& cfg) {
  RunReport r;
  r.kind = std::string(to_string(cfg.kind));
  r.config_hash = cfg.hash();
  return r;
}

void finish(RunReport& report, RunContext& ctx) {
  report.summary = summarize(report.rows);
  auto notes = ctx.take_notes();
  report.notes.insert(report.notes.end(), notes.begin(), notes.end());
  ctx.flush();
}

std::vector<ParallelExample> sample_one_shot(const ExperimentConfig& cfg, const DirectionData& d,
                                             std::size_t n, std::uint64_t seed) {
  if (!d.pool) throw ConfigError(d.spec.name + ": sampling demonstrations needs a pool");
  const auto survivors = length_filter(*d.pool, cfg.selection(1, seed));
  if (survivors.size() < n) {
    throw ConfigError(d.spec.name + ": " + std::to_string(survivors.size()) +
                      " examples survive the length filter, cannot sample " + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<ParallelExample> out;
  for (auto i : rng.sample_indices(survivors.size(), n)) out.push_back(survivors[i]);
  return out;
}

std::optional<double> metric_of(const ScoreRow& r, bool comet) {
  if (!r.error.empty()) return std::nullopt;
  return comet ? r.comet : r.bleu;
}

}  // namespace

LanguageNameTable load_language_table(const ExperimentConfig& cfg) {
  return cfg.languages.empty() ? LanguageNameTable::builtin() : LanguageNameTable::load(cfg.resolve(cfg.languages));
}

DirectionData load_direction(const ExperimentConfig& cfg, const DirectionSpec& spec) {
  DirectionData d{spec, std::nullopt, {}};
  if (!spec.pool.empty()) d.pool = load_pool(cfg.resolve(spec.pool), spec.pool_format, spec.pair, spec.tier);
  if (!spec.documents.empty()) {
    d.test = document_units(chunk_documents(load_documents(cfg.resolve(spec.documents), spec.pair), spec.chunk_size),
                            spec.pair);
  } else if (!spec.test.empty()) {
    d.test = load_pool(cfg.resolve(spec.test), spec.pool_format, spec.pair, spec.tier).examples();
  } else {
    if (!d.pool) throw ConfigError(spec.name + ": no test set and no pool");
    if (cfg.seeds.empty()) throw ConfigError("config must list seeds explicitly");
    auto split = split_ablation(*d.pool, spec.test_size, cfg.seeds.front());
    d.test = std::move(split.test_set);
    d.pool = std::move(split.selection_pool);
  }
  if (d.test.empty()) throw EmptyPoolError(spec.name + ": empty test set");
  return d;
}

std::shared_ptr<MockBackend> make_echo_mock(const ExperimentConfig& cfg, bool strict) {
  auto mock = std::make_shared<MockBackend>(strict);
  mock->set_prompt_match(MockBackend::PromptMatch::suffix);
  const PromptRenderer renderer(load_language_table(cfg));
  for (const auto& spec : cfg.directions) {
    const auto d = load_direction(cfg, spec);
    for (const auto& t : cfg.templates) {
      for (const auto& ex : d.test) mock->add_generation(renderer.render_zero_shot(t, spec.pair, ex.source_text), ex.target_text);
    }
  }
  mock->set_score_fn([](const std::string& text) -> std::optional<ScoreResult> {
    const auto tokens = std::max<std::size_t>(1, text::split_whitespace(text).size());
    return ScoreResult{-0.1 * static_cast<double>(text.size()), tokens};
  });
  mock->set_qe_constant(0.5);
  mock->set_comet_echo(1.0);
  mock->set_seconds_per_token(cfg.backend.seconds_per_token);
  return mock;
}

BackendHandle make_backend(const ExperimentConfig& cfg, const std::string& api_key) {
  BackendHandle h;
  if (cfg.backend.kind == "http") {
    HttpBackendOptions o;
    o.llm_url = cfg.backend.url;
    o.scorer_url = cfg.backend.scorer_url;
    o.api_key = api_key;
    o.max_in_flight = std::max<std::size_t>(cfg.jobs, 1);
    h.http = std::make_shared<HttpBackend>(o);
    h.backend = h.http;
  } else if (cfg.backend.mock_mode == "echo") {
    h.mock = make_echo_mock(cfg, cfg.backend.strict);
    h.backend = h.mock;
  } else {
    h.mock = std::make_shared<MockBackend>(cfg.backend.strict);
    h.mock->set_prompt_match(MockBackend::PromptMatch::suffix);
    std::ifstream in(cfg.resolve(cfg.backend.table));
    if (!in) throw ConfigError("cannot open mock table " + cfg.resolve(cfg.backend.table).string());
    std::string line;
    std::size_t line_no = 0;
    while (text::read_line(in, line)) {
      ++line_no;
      if (text::is_blank(line)) continue;
      try {
        // {"prompt", "output"} lines teach generations; {"text", "logprob", "tokens"} lines teach scores.
        const auto j = json::parse(line);
        if (j.contains("text")) {
          h.mock->add_score(j.at("text").get<std::string>(),
                            {j.at("logprob").get<double>(), j.at("tokens").get<std::size_t>()});
        } else {
          h.mock->add_generation(j.at("prompt").get<std::string>(), j.at("output").get<std::string>());
        }
      } catch (const json::exception& e) {
        throw ParseError(std::string("mock table: ") + e.what(), line_no);
      }
    }
    h.mock->set_seconds_per_token(cfg.backend.seconds_per_token);
    h.mock->set_comet_echo(1.0);
    h.mock->set_qe_constant(0.5);
    h.backend = h.mock;
  }
  if (!cfg.cache_dir.empty()) {
    h.cache = with_cache(h.backend, cfg.resolve(cfg.cache_dir));
    h.backend = h.cache;
  }
  return h;
}

RunReport run_translation(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts) {
  cfg.validate();
  RunContext ctx(cfg, backend, opts);
  auto report = new_report(cfg);
  for (const auto& spec : cfg.directions) {
    const auto d = load_direction(cfg, spec);
    for (const auto& t : cfg.templates) {
      const auto stops = ctx.renderer().stop_sequences(t, spec.pair);
      // Zero-shot rows do not depend on strategies or seeds.
      {
        auto row = row_key(spec.name, t, "zero_shot", 0, cfg.seeds.front());
        const auto set = build_prompts(ctx, d, t, StrategySpec{}, 0, cfg.seeds.front());
        report.rows.push_back(ctx.evaluate(std::move(row), d.test, set, stops));
      }
      for (const auto& s : cfg.strategies) {
        if (s.kind == StrategySpec::Kind::zero_shot) continue;
        for (auto k : cfg.ks) {
          const auto seeds = s.deterministic() ? std::vector<std::uint64_t>{cfg.seeds.front()} : cfg.seeds;
          for (auto seed : seeds) {
            auto row = row_key(spec.name, t, s.str(), k, seed);
            try {
              const auto set = build_prompts(ctx, d, t, s, k, seed);
              report.rows.push_back(ctx.evaluate(std::move(row), d.test, set, stops));
            } catch (const std::exception& e) {
              row.n = d.test.size();
              row.error = e.what();
              spdlog::warn("{} {} K={} seed={}: {}", spec.name, s.str(), k, seed, e.what());
              report.rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  finish(report, ctx);
  return report;
}

RunReport run_correlation_study(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts) {
  cfg.validate();
  RunContext ctx(cfg, backend, opts);
  auto report = new_report(cfg);
  const auto& t = cfg.templates.front();
  const auto seed = cfg.seeds.front();
  // (feature, metric) -> rho per direction
  std::map<std::pair<std::string, std::string>, std::vector<double>> pooled;
  std::vector<std::pair<std::string, std::string>> pooled_order;

  for (const auto& spec : cfg.directions) {
    const auto d = load_direction(cfg, spec);
    const auto stops = ctx.renderer().stop_sequences(t, spec.pair);
    report.rows.push_back(ctx.evaluate(row_key(spec.name, t, "zero_shot", 0, seed), d.test,
                                       build_prompts(ctx, d, t, StrategySpec{}, 0, seed), stops));

    const auto sampled = sample_one_shot(cfg, d, cfg.samples, seed);
    FeatureExtractor extractor(backend, ctx.renderer());
    const auto features = extractor.compute_pool(sampled, RunContext::test_inputs(d), cfg.jobs);

    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      auto row = row_key(spec.name, t, "sample", 1, seed);
      row.sample = i;
      const auto set = few_shot_prompts(ctx.renderer(), t, spec.pair, Demonstration{{sampled[i]}, spec.pair}, d.test);
      rows.push_back(ctx.evaluate(std::move(row), d.test, set, stops));
    }

    for (auto f : kAllFeatures) {
      const std::string fname(to_string(f));
      bool missing = false;
      for (const auto& fv : features) missing = missing || !feature_value(fv, f);
      if (missing) {
        ctx.note(spec.name + ": " + fname + " excluded, feature unavailable for some demonstrations");
        continue;
      }
      for (bool comet : {false, true}) {
        const std::string metric = comet ? "comet" : "bleu";
        std::vector<double> x, y;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (const auto m = metric_of(rows[i], comet)) {
            x.push_back(*feature_value(features[i], f));
            y.push_back(*m);
          }
        }
        if (x.size() < 3) {
          ctx.note(spec.name + ": " + fname + "/" + metric + " excluded, fewer than 3 scored demonstrations");
          continue;
        }
        try {
          const auto c = spearman(x, y);
          report.correlations.push_back({spec.name, fname, metric, c.rho, c.p_value, c.n});
          const auto key = std::make_pair(fname, metric);
          if (!pooled.contains(key)) pooled_order.push_back(key);
          pooled[key].push_back(c.rho);
        } catch (const UndefinedCorrelationError& e) {
          ctx.note(spec.name + ": " + fname + "/" + metric + " excluded, " + e.what());
        }
      }
    }
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  if (cfg.directions.size() > 1) {
    for (const auto& key : pooled_order) {
      const auto& v = pooled[key];
      report.correlations.push_back({"*", key.first, key.second, mean(v), std::nullopt, v.size()});
    }
  }
  finish(report, ctx);
  return report;
}

RunReport run_transfer_study(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts) {
  cfg.validate();
  RunContext ctx(cfg, backend, opts);
  auto report = new_report(cfg);
  const auto& t = cfg.templates.front();
  const auto seed = cfg.seeds.front();
  const auto d1 = load_direction(cfg, cfg.direction(cfg.transfer->s1));
  const auto d2 = load_direction(cfg, cfg.direction(cfg.transfer->s2));
  const auto sampled = sample_one_shot(cfg, d1, cfg.samples, seed);

  struct Setting {
    const DirectionData* data;
    std::string label;
    std::optional<ScoreRow> zero_shot;
    std::vector<ScoreRow> rows;
  };
  Setting settings[2] = {{&d1, "S1:" + d1.spec.name, {}, {}}, {&d2, "S2:" + d2.spec.name, {}, {}}};
  for (auto& s : settings) {
    const auto& d = *s.data;
    const auto stops = ctx.renderer().stop_sequences(t, d.spec.pair);
    s.zero_shot = ctx.evaluate(row_key(s.label, t, "zero_shot", 0, seed), d.test,
                               build_prompts(ctx, d, t, StrategySpec{}, 0, seed), stops);
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      auto row = row_key(s.label, t, "sample", 1, seed);
      row.sample = i;
      // Demonstrations keep S1's language labels when tested on S2.
      const Demonstration demo{{sampled[i]}, d1.spec.pair};
      s.rows.push_back(ctx.evaluate(std::move(row), d.test,
                                    few_shot_prompts(ctx.renderer(), t, d.spec.pair, demo, d.test), stops));
    }
    report.rows.push_back(*s.zero_shot);
    report.rows.insert(report.rows.end(), s.rows.begin(), s.rows.end());
  }

  for (bool comet : {false, true}) {
    TransferRow tr;
    tr.s1 = settings[0].label;
    tr.s2 = settings[1].label;
    tr.metric = comet ? "comet" : "bleu";
    std::vector<double> x, y, all1, all2;
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      const auto a = metric_of(settings[0].rows[i], comet);
      const auto b = metric_of(settings[1].rows[i], comet);
      if (a) all1.push_back(*a);
      if (b) all2.push_back(*b);
      if (a && b) {
        x.push_back(*a);
        y.push_back(*b);
      }
    }
    tr.n = x.size();
    if (!all1.empty()) tr.mean_s1 = mean(all1);
    if (!all2.empty()) tr.mean_s2 = mean(all2);
    tr.zero_shot_s1 = metric_of(*settings[0].zero_shot, comet);
    tr.zero_shot_s2 = metric_of(*settings[1].zero_shot, comet);
    if (tr.mean_s1 && tr.zero_shot_s1) tr.delta_s1 = *tr.mean_s1 - *tr.zero_shot_s1;
    if (tr.mean_s2 && tr.zero_shot_s2) tr.delta_s2 = *tr.mean_s2 - *tr.zero_shot_s2;
    if (x.size() >= 3) {
      try {
        const auto c = spearman(x, y);
        tr.rho = c.rho;
        tr.p_value = c.p_value;
      } catch (const UndefinedCorrelationError& e) {
        ctx.note("transfer " + tr.metric + ": " + e.what());
      }
    } else {
      ctx.note("transfer " + tr.metric + ": fewer than 3 demonstrations scored in both settings");
    }
    report.transfers.push_back(std::move(tr));
  }
  finish(report, ctx);
  return report;
}

RunReport run_pivoting(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts) {
  cfg.validate();
  RunContext ctx(cfg, backend, opts);
  auto report = new_report(cfg);
  const auto& t = cfg.templates.front();
  const auto& pivot = cfg.pivot.language;
  const auto& renderer = ctx.renderer();
  const auto seeds = cfg.pivot.k > 0 ? cfg.seeds : std::vector<std::uint64_t>{cfg.seeds.front()};

  for (const auto& spec : cfg.directions) {
    const auto d = load_direction(cfg, spec);
    const LanguagePair hop1_pair(spec.pair.src(), pivot);
    const LanguagePair hop2_pair(pivot, spec.pair.tgt());
    std::optional<ExamplePool> hop1_pool, hop2_pool;
    if (cfg.pivot.k > 0) {
      hop1_pool = load_pool(cfg.resolve(cfg.pivot.hop1_pool), cfg.pivot.pool_format, hop1_pair, spec.tier);
      hop2_pool = load_pool(cfg.resolve(cfg.pivot.hop2_pool), cfg.pivot.pool_format, hop2_pair, spec.tier);
    }
    for (auto seed : seeds) {
      const std::size_t direct_k = cfg.pivot.k > 0 && d.pool ? cfg.pivot.k : 0;
      auto direct = row_key(spec.name, t, "direct", direct_k, seed);
      try {
        const auto demo = direct_k > 0 ? select_random(*d.pool, cfg.selection(direct_k, seed))
                                       : Demonstration{{}, spec.pair};
        report.rows.push_back(ctx.evaluate(std::move(direct), d.test,
                                           few_shot_prompts(renderer, t, spec.pair, demo, d.test),
                                           renderer.stop_sequences(t, spec.pair)));
      } catch (const std::exception& e) {
        direct.error = e.what();
        report.rows.push_back(std::move(direct));
      }

      auto row = row_key(spec.name, t, "pivot:" + pivot.str(), cfg.pivot.k, seed);
      row.n = d.test.size();
      try {
        const auto demo1 = cfg.pivot.k > 0 ? select_random(*hop1_pool, cfg.selection(cfg.pivot.k, seed))
                                           : Demonstration{{}, hop1_pair};
        const auto demo2 = cfg.pivot.k > 0 ? select_random(*hop2_pool, cfg.selection(cfg.pivot.k, seed))
                                           : Demonstration{{}, hop2_pair};
        std::vector<ParallelExample> hop1_items;
        for (const auto& ex : d.test) hop1_items.push_back({ex.id, ex.source_text, "", hop1_pair});
        auto set1 = few_shot_prompts(renderer, t, hop1_pair, demo1, hop1_items);
        const auto set2_demo = few_shot_prompts(renderer, t, hop2_pair, demo2, {});
        row.demo_hash = sha256_hex(set1.demo_hash + set2_demo.demo_hash);
        ctx.persist_demo(set1);
        ctx.persist_demo(set2_demo);
        if (opts.dry_run) {
          ctx.record(row, hop1_items, set1.prompts, nullptr, "1");
          row.error = "dry run";
          report.rows.push_back(std::move(row));
          continue;
        }
        const auto first = ctx.generate_all(set1.prompts, renderer.stop_sequences(t, hop1_pair));
        std::vector<std::string> mid;
        for (const auto& r : first) {
          mid.push_back(r.text);
          row.tokens += r.tokens_generated;
          row.wall_time_s += r.wall_time_s;
        }
        ctx.record(row, hop1_items, set1.prompts, &mid, "1");

        std::vector<std::size_t> live;
        std::vector<ParallelExample> hop2_items;
        for (std::size_t i = 0; i < mid.size(); ++i) {
          if (text::is_blank(mid[i])) {
            ++row.failed;
            continue;
          }
          live.push_back(i);
          hop2_items.push_back({d.test[i].id, mid[i], d.test[i].target_text, hop2_pair});
        }
        std::vector<std::string> hyps(d.test.size());
        if (!hop2_items.empty()) {
          const auto set2 = few_shot_prompts(renderer, t, hop2_pair, demo2, hop2_items);
          const auto second = ctx.generate_all(set2.prompts, renderer.stop_sequences(t, hop2_pair));
          std::vector<std::string> outs;
          for (std::size_t j = 0; j < second.size(); ++j) {
            hyps[live[j]] = second[j].text;
            outs.push_back(second[j].text);
            row.tokens += second[j].tokens_generated;
            row.wall_time_s += second[j].wall_time_s;
          }
          ctx.record(row, hop2_items, set2.prompts, &outs, "2");
        }
        ctx.score(row, d.test, hyps);
        if (row.failed > 0) {
          row.error = "first hop returned empty output for " + std::to_string(row.failed) + " sentences";
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  finish(report, ctx);
  return report;
}

RunReport run_experiment(const ExperimentConfig& cfg, Backend& backend, const RunOptions& opts) {
  switch (cfg.kind) {
    case ExperimentKind::translation: return run_translation(cfg, backend, opts);
    case ExperimentKind::correlation: return run_correlation_study(cfg, backend, opts);
    case ExperimentKind::transfer: return run_transfer_study(cfg, backend, opts);
    case ExperimentKind::pivot: return run_pivoting(cfg, backend, opts);
  }
  throw std::logic_error("unhandled experiment kind");
}

void write_run_meta(const fs::path& dir, const BackendHandle& handle) {
  json j = json::object();
  if (handle.cache) {
    const auto s = handle.cache->stats();
    j["cache"] = {{"hits", s.hits}, {"misses", s.misses}, {"invalidated", s.invalidated}};
  }
  if (handle.mock) {
    j["mock_calls"] = {{"generate", handle.mock->generate_calls()},
                       {"score", handle.mock->score_calls()},
                       {"embed", handle.mock->embed_calls()},
                       {"qe", handle.mock->qe_calls()},
                       {"comet", handle.mock->comet_calls()}};
  }
  if (handle.http && handle.http->has_scorer()) {
    try {
      j["scorer"] = handle.http->health();
    } catch (const Error& e) {
      j["scorer"] = {{"error", e.what()}};
    }
  }
  fs::create_directories(dir);
  std::ofstream(dir / "run_meta.json", std::ios::binary) << j.dump(2) << '\n';
}

}  // namespace mtprompt
