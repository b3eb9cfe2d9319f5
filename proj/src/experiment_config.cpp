#include "mtprompt/experiment_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "mtprompt/errors.hpp"
#include "mtprompt/hash.hpp"

namespace mtprompt {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::translation: return "translation";
    case ExperimentKind::correlation: return "correlation";
    case ExperimentKind::transfer: return "transfer";
    case ExperimentKind::pivot: return "pivot";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::translation, ExperimentKind::correlation, ExperimentKind::transfer,
                 ExperimentKind::pivot}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(text) + "'");
}

namespace {

constexpr std::pair<StrategySpec::Kind, std::string_view> kStrategyNames[] = {
    {StrategySpec::Kind::zero_shot, "zero_shot"},
    {StrategySpec::Kind::random, "random"},
    {StrategySpec::Kind::topk, "topk"},
    {StrategySpec::Kind::combined, "combined"},
    {StrategySpec::Kind::back_translation, "back_translation"},
    {StrategySpec::Kind::forward_translation, "forward_translation"},
    {StrategySpec::Kind::random_pair, "random_pair"},
    {StrategySpec::Kind::source_only, "source_only"},
    {StrategySpec::Kind::target_only, "target_only"},
};

std::string_view format_name(PoolFormat f) { return f == PoolFormat::jsonl ? "jsonl" : "tsv"; }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

PromptTemplate template_from_json(const json& j) {
  if (j.is_string()) {
    // Short form "A", "A/German" or "A/German/break".
    const auto s = j.get<std::string>();
    PromptTemplate t;
    const auto p1 = s.find('/');
    t.id = parse_template_id(s.substr(0, p1));
    if (p1 != std::string::npos) {
      const auto p2 = s.find('/', p1 + 1);
      t.language = parse_template_language(s.substr(p1 + 1, p2 == std::string::npos ? p2 : p2 - p1 - 1));
      if (p2 != std::string::npos) {
        const auto mode = s.substr(p2 + 1);
        if (mode != "break" && mode != "inline") throw ConfigError("template mode must be break or inline: " + s);
        t.line_break = mode == "break";
      }
    }
    return t;
  }
  return PromptTemplate{parse_template_id(j.at("id").get<std::string>()),
                        parse_template_language(get_or<std::string>(j, "language", "English")),
                        get_or(j, "line_break", false)};
}

json template_to_json(const PromptTemplate& t) {
  return {{"id", std::string(to_string(t.id))},
          {"language", std::string(to_string(t.language))},
          {"line_break", t.line_break}};
}

DirectionSpec direction_from_json(const json& j) {
  DirectionSpec d;
  d.pair = LanguagePair::parse(j.at("pair").get<std::string>());
  d.name = get_or<std::string>(j, "name", d.pair.str());
  d.pool = get_or<std::string>(j, "pool", "");
  d.pool_format = parse_pool_format(get_or<std::string>(j, "pool_format", "tsv"));
  d.tier = parse_tier(get_or<std::string>(j, "tier", "high_quality"));
  d.test = get_or<std::string>(j, "test", "");
  d.test_size = get_or<std::size_t>(j, "test_size", kAblationTestSize);
  d.documents = get_or<std::string>(j, "documents", "");
  d.chunk_size = get_or<std::size_t>(j, "chunk_size", kDocumentChunkSize);
  d.features = get_or<std::string>(j, "features", "");
  d.mono_src = get_or<std::string>(j, "mono_src", "");
  d.mono_tgt = get_or<std::string>(j, "mono_tgt", "");
  return d;
}

json direction_to_json(const DirectionSpec& d) {
  return {{"name", d.name},
          {"pair", d.pair.str()},
          {"pool", d.pool.string()},
          {"pool_format", std::string(format_name(d.pool_format))},
          {"tier", std::string(to_string(d.tier))},
          {"test", d.test.string()},
          {"test_size", d.test_size},
          {"documents", d.documents.string()},
          {"chunk_size", d.chunk_size},
          {"features", d.features.string()},
          {"mono_src", d.mono_src.string()},
          {"mono_tgt", d.mono_tgt.string()}};
}

}  // namespace

std::string StrategySpec::str() const {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == kind) return kind == Kind::topk ? "topk:" + std::string(to_string(feature)) : std::string(name);
  }
  return "?";
}

StrategySpec StrategySpec::parse(std::string_view text) {
  StrategySpec s;
  if (text.starts_with("topk:")) {
    s.kind = Kind::topk;
    try {
      s.feature = parse_feature_name(text.substr(5));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return s;
  }
  for (const auto& [k, name] : kStrategyNames) {
    if (name == text && k != Kind::topk) {
      s.kind = k;
      return s;
    }
  }
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

bool StrategySpec::deterministic() const {
  return kind == Kind::zero_shot || kind == Kind::topk || kind == Kind::combined;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    c.kind = parse_experiment_kind(get_or<std::string>(j, "experiment", "translation"));
    for (const auto& d : j.value("directions", json::array())) c.directions.push_back(direction_from_json(d));
    if (j.contains("templates")) {
      c.templates.clear();
      for (const auto& t : j.at("templates")) c.templates.push_back(template_from_json(t));
    } else if (j.contains("template")) {
      c.templates = {template_from_json(j.at("template"))};
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(StrategySpec::parse(s.get<std::string>()));
    }
    if (j.contains("k")) {
      const auto& k = j.at("k");
      c.ks = k.is_array() ? k.get<std::vector<std::size_t>>() : std::vector<std::size_t>{k.get<std::size_t>()};
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.samples = get_or<std::size_t>(j, "samples", c.samples);
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      c.min_tokens = get_or<std::size_t>(s, "min_tokens", c.min_tokens);
      c.max_tokens = get_or<std::size_t>(s, "max_tokens", c.max_tokens);
      c.ordering = parse_ordering(get_or<std::string>(s, "ordering", "ascending_score"));
    }
    if (j.contains("combined")) {
      const auto& s = j.at("combined");
      c.combined.sem_keep = get_or<std::size_t>(s, "sem_keep", c.combined.sem_keep);
      c.combined.sem_drop = get_or<std::size_t>(s, "sem_drop", c.combined.sem_drop);
      c.combined.lm_keep = get_or<std::size_t>(s, "lm_keep", c.combined.lm_keep);
      c.combined.reference_pool_size = get_or<std::size_t>(s, "reference_pool_size", c.combined.reference_pool_size);
      const auto scaling = get_or<std::string>(s, "scaling", "proportional");
      if (scaling == "proportional") {
        c.combined.scaling = StageScaling::proportional;
      } else if (scaling == "clamp_only") {
        c.combined.scaling = StageScaling::clamp_only;
      } else {
        throw ConfigError("unknown stage scaling '" + scaling + "'");
      }
    }
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.backend.kind = get_or<std::string>(b, "kind", c.backend.kind);
      c.backend.url = get_or<std::string>(b, "url", "");
      c.backend.scorer_url = get_or<std::string>(b, "scorer_url", "");
      c.backend.mock_mode = get_or<std::string>(b, "mode", c.backend.mock_mode);
      c.backend.table = get_or<std::string>(b, "table", "");
      c.backend.strict = get_or(b, "strict", true);
      c.backend.seconds_per_token = get_or(b, "seconds_per_token", 0.0);
    }
    if (j.contains("pivot")) {
      const auto& p = j.at("pivot");
      c.pivot.language = LangCode(get_or<std::string>(p, "language", "en"));
      c.pivot.k = get_or<std::size_t>(p, "k", 0);
      c.pivot.hop1_pool = get_or<std::string>(p, "hop1_pool", "");
      c.pivot.hop2_pool = get_or<std::string>(p, "hop2_pool", "");
      c.pivot.pool_format = parse_pool_format(get_or<std::string>(p, "pool_format", "tsv"));
    }
    if (j.contains("transfer") && !j.at("transfer").is_null()) {
      const auto& t = j.at("transfer");
      c.transfer = TransferSpec{t.at("s1").get<std::string>(), t.at("s2").get<std::string>()};
    }
    c.languages = get_or<std::string>(j, "languages", "");
    c.cache_dir = get_or<std::string>(j, "cache_dir", "");
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    c.jobs = get_or<std::size_t>(j, "jobs", 1);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = std::string(to_string(kind));
  j["directions"] = json::array();
  for (const auto& d : directions) j["directions"].push_back(direction_to_json(d));
  j["templates"] = json::array();
  for (const auto& t : templates) j["templates"].push_back(template_to_json(t));
  j["strategies"] = json::array();
  for (const auto& s : strategies) j["strategies"].push_back(s.str());
  j["k"] = ks;
  j["seeds"] = seeds;
  j["samples"] = samples;
  j["selection"] = {{"min_tokens", min_tokens},
                    {"max_tokens", max_tokens},
                    {"ordering", ordering == Ordering::ascending_score ? "ascending_score" : "pool_order"}};
  j["combined"] = {{"sem_keep", combined.sem_keep},
                   {"sem_drop", combined.sem_drop},
                   {"lm_keep", combined.lm_keep},
                   {"reference_pool_size", combined.reference_pool_size},
                   {"scaling", combined.scaling == StageScaling::proportional ? "proportional" : "clamp_only"}};
  j["backend"] = {{"kind", backend.kind},
                  {"url", backend.url},
                  {"scorer_url", backend.scorer_url},
                  {"mode", backend.mock_mode},
                  {"table", backend.table.string()},
                  {"strict", backend.strict},
                  {"seconds_per_token", backend.seconds_per_token}};
  j["pivot"] = {{"language", pivot.language.str()},
                {"k", pivot.k},
                {"hop1_pool", pivot.hop1_pool.string()},
                {"hop2_pool", pivot.hop2_pool.string()},
                {"pool_format", std::string(format_name(pivot.pool_format))}};
  j["transfer"] = transfer ? json{{"s1", transfer->s1}, {"s2", transfer->s2}} : json(nullptr);
  j["languages"] = languages.string();
  j["cache_dir"] = cache_dir.string();
  j["output_dir"] = output_dir.string();
  j["jobs"] = jobs;
  return j;
}

fs::path ExperimentConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

const DirectionSpec& ExperimentConfig::direction(const std::string& name) const {
  for (const auto& d : directions) {
    if (d.name == name) return d;
  }
  throw ConfigError("no direction named '" + name + "'");
}

SelectionParams ExperimentConfig::selection(std::size_t k, std::uint64_t seed) const {
  return SelectionParams{k, min_tokens, max_tokens, seed, ordering};
}

void ExperimentConfig::validate() const {
  auto require_file = [&](const fs::path& p, const std::string& what) {
    if (!p.empty() && !fs::exists(resolve(p))) throw ConfigError(what + " not found: " + resolve(p).string());
  };
  if (directions.empty()) throw ConfigError("config lists no directions");
  if (seeds.empty()) throw ConfigError("config must list seeds explicitly");
  if (templates.empty()) throw ConfigError("config lists no templates");
  if (strategies.empty()) throw ConfigError("config lists no strategies");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (min_tokens >= max_tokens) throw ConfigError("selection.min_tokens must be < max_tokens");
  try {
    combined.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::set<std::string> names;
  for (const auto& d : directions) {
    if (!names.insert(d.name).second) throw ConfigError("duplicate direction name '" + d.name + "'");
    require_file(d.pool, d.name + " pool");
    require_file(d.test, d.name + " test set");
    require_file(d.documents, d.name + " documents");
    require_file(d.features, d.name + " features");
    require_file(d.mono_src, d.name + " source monolingual data");
    require_file(d.mono_tgt, d.name + " target monolingual data");
    if (d.test.empty() && d.documents.empty() && d.pool.empty()) {
      throw ConfigError(d.name + ": needs a test set, documents or a pool to hold one out of");
    }
    if (d.chunk_size == 0) throw ConfigError(d.name + ": chunk_size must be >= 1");
  }
  for (auto k : ks) {
    if (k == 0) throw ConfigError("k values must be >= 1; zero-shot is its own strategy");
  }
  require_file(backend.table, "mock table");
  require_file(languages, "language table");
  if (backend.kind == "http") {
    if (backend.url.empty()) throw ConfigError("http backend needs a url");
  } else if (backend.kind == "mock") {
    if (backend.mock_mode != "echo" && backend.mock_mode != "table") {
      throw ConfigError("mock mode must be echo or table");
    }
    if (backend.mock_mode == "table" && backend.table.empty()) throw ConfigError("mock table mode needs a table");
  } else {
    throw ConfigError("backend kind must be http or mock");
  }
  if (kind == ExperimentKind::correlation || kind == ExperimentKind::transfer) {
    if (samples == 0) throw ConfigError("samples must be >= 1");
  }
  if (kind == ExperimentKind::transfer) {
    if (!transfer) throw ConfigError("transfer experiment needs transfer.s1 and transfer.s2");
    direction(transfer->s1);
    direction(transfer->s2);
    if (direction(transfer->s1).pool.empty()) throw ConfigError("transfer.s1 needs a pool to sample from");
  }
  if (kind == ExperimentKind::pivot) {
    for (const auto& d : directions) {
      if (pivot.language == d.pair.src() || pivot.language == d.pair.tgt()) {
        throw ConfigError(d.name + ": pivot language " + pivot.language.str() + " equals the source or target");
      }
    }
    require_file(pivot.hop1_pool, "pivot hop1 pool");
    require_file(pivot.hop2_pool, "pivot hop2 pool");
    if (pivot.k > 0 && (pivot.hop1_pool.empty() || pivot.hop2_pool.empty())) {
      throw ConfigError("few-shot pivoting needs hop1_pool and hop2_pool");
    }
  }
}

std::string ExperimentConfig::hash() const {
  auto j = to_json();
  j.erase("cache_dir");
  j.erase("output_dir");
  j.erase("jobs");
  return sha256_hex(j.dump());
}

}  // namespace mtprompt
