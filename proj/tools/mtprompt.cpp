// mtprompt: batch driver for prompting experiments.
//
//   mtprompt translate --config exp.json --cache .cache
//   mtprompt select --pool pool.tsv --pair de-en --strategy topk:sem_score --features f.tsv --k 4
//   mtprompt report --report out/report.json --plots out/plots

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "mtprompt/augment.hpp"
#include "mtprompt/corpus.hpp"
#include "mtprompt/errors.hpp"
#include "mtprompt/features.hpp"
#include "mtprompt/runner.hpp"
#include "mtprompt/selection.hpp"

namespace fs = std::filesystem;
using namespace mtprompt;

namespace {

struct GlobalFlags {
  std::string config;
  std::string backend;
  std::string scorer;
  std::string cache;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool dry_run = false;
  bool verbose = false;
};

std::string env_or(const char* name, const std::string& fallback = "") {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

/// --backend is an http URL, "mock:echo" or "mock:<table.jsonl>".
void apply_backend_flag(ExperimentConfig& cfg, const GlobalFlags& g) {
  if (!g.backend.empty()) {
    if (g.backend.starts_with("mock:")) {
      cfg.backend.kind = "mock";
      const auto rest = g.backend.substr(5);
      if (rest == "echo") {
        cfg.backend.mock_mode = "echo";
      } else {
        cfg.backend.mock_mode = "table";
        cfg.backend.table = fs::absolute(rest);
      }
    } else {
      cfg.backend.kind = "http";
      cfg.backend.url = g.backend;
    }
  }
  if (!g.scorer.empty()) cfg.backend.scorer_url = g.scorer;
  const auto cache = g.cache.empty() ? env_or("MTPROMPT_CACHE_DIR") : g.cache;
  if (!cache.empty()) cfg.cache_dir = fs::absolute(cache);
  if (g.jobs) cfg.jobs = *g.jobs;
  if (g.seed) cfg.seeds = {*g.seed};
}

ExperimentConfig load_config(const GlobalFlags& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  auto cfg = ExperimentConfig::load(g.config);
  apply_backend_flag(cfg, g);
  return cfg;
}

/// Backend for single-step subcommands that have no config file.
BackendHandle standalone_backend(const GlobalFlags& g, const LanguagePair& pair) {
  ExperimentConfig cfg;
  DirectionSpec d;
  d.name = pair.str();
  d.pair = pair;
  cfg.directions.push_back(d);
  cfg.backend.mock_mode = "table";
  apply_backend_flag(cfg, g);
  if (cfg.backend.kind == "mock" && cfg.backend.mock_mode == "echo") {
    throw ConfigError("the echo mock needs a config with test sets; use --backend URL or mock:<table>");
  }
  if (cfg.backend.kind == "mock" && cfg.backend.table.empty()) {
    throw ConfigError("--backend is required (URL or mock:<table.jsonl>)");
  }
  return make_backend(cfg, env_or("MTPROMPT_API_KEY"));
}

std::ofstream open_out(const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

int run_experiment_cmd(const GlobalFlags& g, ExperimentKind kind) {
  auto cfg = load_config(g);
  cfg.kind = kind;
  auto handle = make_backend(cfg, env_or("MTPROMPT_API_KEY"));
  const auto report = run_experiment(cfg, *handle.backend, RunOptions{g.dry_run});
  if (cfg.output_dir.empty()) {
    std::cout << report.dump();
  } else {
    const auto dir = cfg.resolve(cfg.output_dir);
    write_report(report, dir);
    emit_plot_data(report, dir / "plots");
    write_run_meta(dir, handle);
    spdlog::info("wrote {} rows to {}", report.rows.size(), dir.string());
  }
  if (handle.cache) {
    const auto s = handle.cache->stats();
    spdlog::info("cache: {} hits, {} misses, {} invalidated", s.hits, s.misses, s.invalidated);
  }
  return 0;
}

void print_summary(const RunReport& report) {
  std::cout << "direction\ttemplate\tstrategy\tK\trows\tBLEU\tCOMET\tdBLEU\tdCOMET\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  for (const auto& s : report.summary) {
    std::cout << s.direction << '\t' << s.template_desc << '\t' << s.strategy << '\t' << s.k << '\t' << s.rows
              << '\t' << cell(s.bleu) << '\t' << cell(s.comet) << '\t' << cell(s.delta_bleu) << '\t'
              << cell(s.delta_comet) << '\n';
  }
  for (const auto& c : report.correlations) {
    std::cout << "rho\t" << c.direction << '\t' << c.feature << '\t' << c.metric << '\t' << format_double(c.rho)
              << '\t' << cell(c.p_value) << '\t' << c.n << '\n';
  }
  for (const auto& t : report.transfers) {
    std::cout << "transfer\t" << t.s1 << '\t' << t.s2 << '\t' << t.metric << '\t' << cell(t.rho) << '\t'
              << cell(t.delta_s1) << '\t' << cell(t.delta_s2) << '\n';
  }
  for (const auto& n : report.notes) std::cout << "note\t" << n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompting experiments for machine translation with large language models"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--backend", g.backend, "LLM endpoint URL, mock:echo or mock:<table.jsonl>");
  app.add_option("--scorer", g.scorer, "Scorer sidecar URL");
  app.add_option("--cache", g.cache, "Response cache directory (env MTPROMPT_CACHE_DIR)");
  app.add_option("--seed", g.seed, "Seed; replaces the config's seed list");
  app.add_option("--jobs", g.jobs, "Concurrent backend calls")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Render prompts only");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  // Data arguments shared by the single-step subcommands.
  std::string pool_path, pair_text = "de-en", format = "tsv", out_path, tier = "high_quality";

  auto* split = app.add_subcommand("split", "Hold out an ablation test set from a pool");
  std::size_t test_size = 100;
  std::string out_test, out_pool;
  split->add_option("--pool", pool_path)->required();
  split->add_option("--pair", pair_text)->required();
  split->add_option("--format", format);
  split->add_option("--test-size", test_size);
  split->add_option("--out-test", out_test)->required();
  split->add_option("--out-pool", out_pool)->required();

  auto* features = app.add_subcommand("features", "Compute demonstration features for a pool");
  std::string test_path;
  features->add_option("--pool", pool_path)->required();
  features->add_option("--pair", pair_text)->required();
  features->add_option("--format", format);
  features->add_option("--test", test_path, "Test set whose sources feed CaseSemScore");
  features->add_option("--out", out_path)->required();

  auto* select = app.add_subcommand("select", "Select a demonstration from a pool");
  std::string strategy = "random", features_path;
  std::size_t k = 1;
  select->add_option("--pool", pool_path)->required();
  select->add_option("--pair", pair_text)->required();
  select->add_option("--format", format);
  select->add_option("--tier", tier);
  select->add_option("--strategy", strategy, "random, topk:<feature> or combined");
  select->add_option("--features", features_path, "Feature TSV from `features`");
  select->add_option("--k", k);
  CombinedParams combined;
  bool clamp_only = false;
  select->add_option("--sem-keep", combined.sem_keep, "Combined: examples kept by SemScore");
  select->add_option("--sem-drop", combined.sem_drop, "Combined: top SemScore examples dropped");
  select->add_option("--lm-keep", combined.lm_keep, "Combined: examples kept by LMScore");
  select->add_flag("--clamp-only", clamp_only, "Combined: do not scale stage sizes with the pool");
  select->add_option("--out", out_path)->required();

  auto* augment = app.add_subcommand("augment", "Build pseudo-parallel examples from monolingual text");
  std::string mode = "back", mono_src, mono_tgt;
  augment->add_option("--mode", mode, "back, forward or random")->check(CLI::IsMember({"back", "forward", "random"}));
  augment->add_option("--pair", pair_text)->required();
  augment->add_option("--mono-src", mono_src);
  augment->add_option("--mono-tgt", mono_tgt);
  augment->add_option("--k", k);
  augment->add_option("--out", out_path)->required();

  auto* translate = app.add_subcommand("translate", "Run a translation experiment");
  auto* correlate = app.add_subcommand("correlate", "Run a feature correlation study");
  auto* transfer = app.add_subcommand("transfer", "Run a transfer study");
  auto* pivot = app.add_subcommand("pivot", "Compare direct and pivot translation");

  auto* report_cmd = app.add_subcommand("report", "Summarize a report and regenerate plot data");
  std::string report_path, plots_dir;
  report_cmd->add_option("--report", report_path)->required();
  report_cmd->add_option("--plots", plots_dir);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    const std::uint64_t seed = g.seed.value_or(0);
    const std::size_t jobs = g.jobs.value_or(1);
    if (*split) {
      const auto pair = LanguagePair::parse(pair_text);
      const auto fmt = parse_pool_format(format);
      const auto pool = load_pool(pool_path, fmt, pair, PoolTier::high_quality);
      const auto s = split_ablation(pool, test_size, seed);
      auto t = open_out(out_test);
      write_pool(t, ExamplePool(pair, pool.tier(), s.test_set), fmt);
      auto p = open_out(out_pool);
      write_pool(p, s.selection_pool, fmt);
      spdlog::info("{} test, {} pool", s.test_set.size(), s.selection_pool.size());
    } else if (*features) {
      const auto pair = LanguagePair::parse(pair_text);
      const auto fmt = parse_pool_format(format);
      const auto pool = load_pool(pool_path, fmt, pair, PoolTier::high_quality);
      TestInputs inputs{pair.src(), {}};
      if (!test_path.empty()) {
        for (const auto& ex : load_pool(test_path, fmt, pair, PoolTier::high_quality).examples()) {
          inputs.texts.push_back(ex.source_text);
        }
      }
      auto handle = standalone_backend(g, pair);
      FeatureExtractor extractor(*handle.backend, PromptRenderer{});
      const auto vectors = extractor.compute_pool(pool.examples(), inputs, jobs);
      std::vector<std::string> ids;
      for (const auto& ex : pool.examples()) ids.push_back(ex.id);
      auto out = open_out(out_path);
      write_feature_tsv(out, ids, vectors);
    } else if (*select) {
      const auto pair = LanguagePair::parse(pair_text);
      const auto pool = load_pool(pool_path, parse_pool_format(format), pair, parse_tier(tier));
      const auto spec = StrategySpec::parse(strategy);
      const SelectionParams params{k, 10, 100, seed, Ordering::ascending_score};
      std::optional<FeatureTable> table;
      if (spec.kind != StrategySpec::Kind::random) {
        if (features_path.empty()) throw ConfigError("--features is required for " + strategy);
        std::ifstream in(features_path);
        if (!in) throw Error("cannot open " + features_path);
        table = read_feature_tsv(in);
      }
      Demonstration demo{{}, pair};
      if (spec.kind == StrategySpec::Kind::random) {
        demo = select_random(pool, params);
      } else if (spec.kind == StrategySpec::Kind::topk) {
        demo = select_topk_by_feature(pool, table->column(spec.feature), params);
      } else if (spec.kind == StrategySpec::Kind::combined) {
        if (clamp_only) combined.scaling = StageScaling::clamp_only;
        combined.validate();
        demo = select_combined(pool, table->column(FeatureName::sem_score), table->column(FeatureName::lm_score),
                               table->column(FeatureName::tlength), k, combined);
      } else {
        throw ConfigError("select supports random, topk:<feature> and combined");
      }
      auto out = open_out(out_path);
      write_demonstration_jsonl(out, demo);
      std::cout << demonstration_hash(demo) << '\n';
    } else if (*augment) {
      const auto pair = LanguagePair::parse(pair_text);
      AugmentedDemonstration demo{{}, pair};
      if (mode == "random") {
        if (mono_src.empty() || mono_tgt.empty()) throw ConfigError("--mono-src and --mono-tgt are required");
        demo = build_random_pairs(load_monolingual(mono_src, pair.src()), load_monolingual(mono_tgt, pair.tgt()),
                                  pair, k, seed);
      } else {
        auto handle = standalone_backend(g, pair);
        const PromptRenderer renderer;
        const AugmentOptions opts{PromptTemplate{}, jobs};
        if (mode == "back") {
          if (mono_tgt.empty()) throw ConfigError("--mono-tgt is required");
          demo = build_back_translated(load_monolingual(mono_tgt, pair.tgt()), pair, renderer, *handle.backend, k,
                                       seed, opts);
        } else {
          if (mono_src.empty()) throw ConfigError("--mono-src is required");
          demo = build_forward_translated(load_monolingual(mono_src, pair.src()), pair, renderer, *handle.backend,
                                          k, seed, opts);
        }
      }
      auto out = open_out(out_path);
      write_augmented_jsonl(out, demo);
    } else if (*translate) {
      return run_experiment_cmd(g, ExperimentKind::translation);
    } else if (*correlate) {
      return run_experiment_cmd(g, ExperimentKind::correlation);
    } else if (*transfer) {
      return run_experiment_cmd(g, ExperimentKind::transfer);
    } else if (*pivot) {
      return run_experiment_cmd(g, ExperimentKind::pivot);
    } else if (*report_cmd) {
      const auto report = read_report(report_path);
      print_summary(report);
      if (!plots_dir.empty()) emit_plot_data(report, plots_dir);
    }
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
