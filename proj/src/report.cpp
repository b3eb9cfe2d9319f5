#include "mtprompt/report.hpp"

#include <fstream>
#include <map>
#include <set>
#include <ostream>
#include <tuple>

#include "mtprompt/errors.hpp"
#include "mtprompt/features.hpp"
#include "mtprompt/metrics.hpp"

namespace mtprompt {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
std::optional<T> opt_get(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string tsv_field(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return mean(v);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

using GroupKey = std::tuple<std::string, std::string, std::string, std::size_t>;

/// Groups row indices by (direction, template, strategy, K) in first-seen order.
std::vector<std::pair<GroupKey, std::vector<const ScoreRow*>>> group_rows(const std::vector<ScoreRow>& rows,
                                                                          bool skip_zero_shot) {
  std::vector<std::pair<GroupKey, std::vector<const ScoreRow*>>> groups;
  std::map<GroupKey, std::size_t> index;
  for (const auto& r : rows) {
    if (skip_zero_shot && r.strategy == "zero_shot") continue;
    GroupKey key{r.direction, r.template_desc, r.strategy, r.k};
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back({key, {}});
    groups[it->second].second.push_back(&r);
  }
  return groups;
}

}  // namespace

json RunReport::to_json() const {
  json j;
  j["kind"] = kind;
  j["config_hash"] = config_hash;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"direction", r.direction},
                         {"template", r.template_desc},
                         {"strategy", r.strategy},
                         {"k", r.k},
                         {"seed", r.seed},
                         {"sample", r.sample ? json(*r.sample) : json(nullptr)},
                         {"bleu", opt(r.bleu)},
                         {"comet", opt(r.comet)},
                         {"n", r.n},
                         {"demo_hash", r.demo_hash},
                         {"tokens", r.tokens},
                         {"wall_time_s", r.wall_time_s},
                         {"failed", r.failed},
                         {"error", r.error}});
  }
  j["summary"] = json::array();
  for (const auto& s : summary) {
    j["summary"].push_back({{"direction", s.direction},
                            {"template", s.template_desc},
                            {"strategy", s.strategy},
                            {"k", s.k},
                            {"rows", s.rows},
                            {"bleu", opt(s.bleu)},
                            {"comet", opt(s.comet)},
                            {"delta_bleu", opt(s.delta_bleu)},
                            {"delta_comet", opt(s.delta_comet)},
                            {"seconds_per_token", s.seconds_per_token}});
  }
  j["correlations"] = json::array();
  for (const auto& c : correlations) {
    j["correlations"].push_back({{"direction", c.direction},
                                 {"feature", c.feature},
                                 {"metric", c.metric},
                                 {"rho", c.rho},
                                 {"p_value", opt(c.p_value)},
                                 {"n", c.n}});
  }
  j["transfers"] = json::array();
  for (const auto& t : transfers) {
    j["transfers"].push_back({{"s1", t.s1},
                              {"s2", t.s2},
                              {"metric", t.metric},
                              {"rho", opt(t.rho)},
                              {"p_value", opt(t.p_value)},
                              {"n", t.n},
                              {"mean_s1", opt(t.mean_s1)},
                              {"mean_s2", opt(t.mean_s2)},
                              {"zero_shot_s1", opt(t.zero_shot_s1)},
                              {"zero_shot_s2", opt(t.zero_shot_s2)},
                              {"delta_s1", opt(t.delta_s1)},
                              {"delta_s2", opt(t.delta_s2)}});
  }
  j["notes"] = notes;
  return j;
}

RunReport RunReport::from_json(const json& j) {
  RunReport r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& x : j.at("rows")) {
      ScoreRow row;
      row.direction = x.at("direction").get<std::string>();
      row.template_desc = x.at("template").get<std::string>();
      row.strategy = x.at("strategy").get<std::string>();
      row.k = x.at("k").get<std::size_t>();
      row.seed = x.at("seed").get<std::uint64_t>();
      row.sample = opt_get<std::size_t>(x, "sample");
      row.bleu = opt_get<double>(x, "bleu");
      row.comet = opt_get<double>(x, "comet");
      row.n = x.at("n").get<std::size_t>();
      row.demo_hash = x.at("demo_hash").get<std::string>();
      row.tokens = x.at("tokens").get<std::size_t>();
      row.wall_time_s = x.at("wall_time_s").get<double>();
      row.failed = x.at("failed").get<std::size_t>();
      row.error = x.at("error").get<std::string>();
      r.rows.push_back(std::move(row));
    }
    for (const auto& x : j.at("summary")) {
      SummaryRow s;
      s.direction = x.at("direction").get<std::string>();
      s.template_desc = x.at("template").get<std::string>();
      s.strategy = x.at("strategy").get<std::string>();
      s.k = x.at("k").get<std::size_t>();
      s.rows = x.at("rows").get<std::size_t>();
      s.bleu = opt_get<double>(x, "bleu");
      s.comet = opt_get<double>(x, "comet");
      s.delta_bleu = opt_get<double>(x, "delta_bleu");
      s.delta_comet = opt_get<double>(x, "delta_comet");
      s.seconds_per_token = x.at("seconds_per_token").get<double>();
      r.summary.push_back(std::move(s));
    }
    for (const auto& x : j.at("correlations")) {
      r.correlations.push_back({x.at("direction").get<std::string>(), x.at("feature").get<std::string>(),
                                x.at("metric").get<std::string>(), x.at("rho").get<double>(),
                                opt_get<double>(x, "p_value"), x.at("n").get<std::size_t>()});
    }
    for (const auto& x : j.at("transfers")) {
      r.transfers.push_back({x.at("s1").get<std::string>(), x.at("s2").get<std::string>(),
                             x.at("metric").get<std::string>(), opt_get<double>(x, "rho"),
                             opt_get<double>(x, "p_value"), x.at("n").get<std::size_t>(),
                             opt_get<double>(x, "mean_s1"), opt_get<double>(x, "mean_s2"),
                             opt_get<double>(x, "zero_shot_s1"), opt_get<double>(x, "zero_shot_s2"),
                             opt_get<double>(x, "delta_s1"), opt_get<double>(x, "delta_s2")});
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad report: ") + e.what(), 0);
  }
  return r;
}

std::string RunReport::dump() const { return to_json().dump(2) + "\n"; }

std::vector<SummaryRow> summarize(const std::vector<ScoreRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::tuple<std::string, std::string>, const SummaryRow*> zero_shot;
  for (const auto& [key, members] : group_rows(rows, false)) {
    SummaryRow s;
    std::tie(s.direction, s.template_desc, s.strategy, s.k) = key;
    std::vector<double> bleu, comet;
    std::size_t tokens = 0;
    double wall = 0.0;
    for (const auto* r : members) {
      if (!r->error.empty()) continue;
      ++s.rows;
      if (r->bleu) bleu.push_back(*r->bleu);
      if (r->comet) comet.push_back(*r->comet);
      tokens += r->tokens;
      wall += r->wall_time_s;
    }
    s.bleu = mean_of(bleu);
    s.comet = mean_of(comet);
    s.seconds_per_token = tokens == 0 ? 0.0 : wall / static_cast<double>(tokens);
    out.push_back(std::move(s));
  }
  for (const auto& s : out) {
    if (s.strategy == "zero_shot") zero_shot[{s.direction, s.template_desc}] = &s;
  }
  for (auto& s : out) {
    const auto it = zero_shot.find({s.direction, s.template_desc});
    if (it == zero_shot.end()) continue;
    if (s.bleu && it->second->bleu) s.delta_bleu = *s.bleu - *it->second->bleu;
    if (s.comet && it->second->comet) s.delta_comet = *s.comet - *it->second->comet;
  }

  // Unweighted mean over directions.
  using Key = std::tuple<std::string, std::string, std::size_t>;
  std::vector<std::pair<Key, std::vector<const SummaryRow*>>> groups;
  std::map<Key, std::size_t> index;
  std::set<std::string> directions;
  for (const auto& s : out) {
    directions.insert(s.direction);
    Key key{s.template_desc, s.strategy, s.k};
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back({key, {}});
    groups[it->second].second.push_back(&s);
  }
  if (directions.size() < 2) return out;
  std::vector<SummaryRow> averaged;
  for (const auto& [key, members] : groups) {
    SummaryRow a;
    a.direction = "*";
    std::tie(a.template_desc, a.strategy, a.k) = key;
    std::vector<double> bleu, comet, dbleu, dcomet, spt;
    for (const auto* s : members) {
      a.rows += s->rows;
      if (s->bleu) bleu.push_back(*s->bleu);
      if (s->comet) comet.push_back(*s->comet);
      if (s->delta_bleu) dbleu.push_back(*s->delta_bleu);
      if (s->delta_comet) dcomet.push_back(*s->delta_comet);
      spt.push_back(s->seconds_per_token);
    }
    a.bleu = mean_of(bleu);
    a.comet = mean_of(comet);
    a.delta_bleu = mean_of(dbleu);
    a.delta_comet = mean_of(dcomet);
    a.seconds_per_token = mean(spt);
    averaged.push_back(std::move(a));
  }
  out.insert(out.end(), averaged.begin(), averaged.end());
  return out;
}

void write_rows_tsv(std::ostream& out, const std::vector<ScoreRow>& rows) {
  out << "direction\tstrategy\tK\tBLEU\tCOMET\tn\tseed\tdemo_hash\ttemplate\tsample\tseconds_per_token\tfailed\terror\n";
  for (const auto& r : rows) {
    out << tsv_field(r.direction) << '\t' << r.strategy << '\t' << r.k << '\t' << cell(r.bleu) << '\t'
        << cell(r.comet) << '\t' << r.n << '\t' << r.seed << '\t' << r.demo_hash << '\t' << r.template_desc << '\t'
        << (r.sample ? std::to_string(*r.sample) : "NA") << '\t' << format_double(r.seconds_per_token()) << '\t'
        << r.failed << '\t' << tsv_field(r.error) << '\n';
  }
}

void write_report(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  open_out(dir / "report.json") << report.dump();
  auto tsv = open_out(dir / "report.tsv");
  write_rows_tsv(tsv, report.rows);
}

RunReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  try {
    return RunReport::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void emit_plot_data(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  const auto groups = group_rows(report.rows, true);
  auto values = [](const std::vector<const ScoreRow*>& members, bool comet) {
    std::vector<double> v;
    for (const auto* r : members) {
      if (!r->error.empty()) continue;
      const auto& x = comet ? r->comet : r->bleu;
      if (x) v.push_back(*x);
    }
    return v;
  };
  auto key_fields = [](const GroupKey& key) {
    const auto& [direction, tmpl, strategy, k] = key;
    return csv_field(direction) + "," + csv_field(tmpl) + "," + csv_field(strategy) + "," + std::to_string(k);
  };

  for (bool comet : {false, true}) {
    auto out = open_out(dir / (comet ? "quantiles_comet.csv" : "quantiles_bleu.csv"));
    out << "direction,template,strategy,k,n,min,q1,median,q3,max\n";
    for (const auto& [key, members] : groups) {
      const auto v = values(members, comet);
      if (v.empty()) continue;
      out << key_fields(key) << ',' << v.size();
      for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) out << ',' << format_double(quantile(v, q));
      out << '\n';
    }
  }

  auto curves = open_out(dir / "k_curves.csv");
  curves << "direction,template,strategy,k,metric,n,mean,sd\n";
  for (const auto& [key, members] : groups) {
    for (bool comet : {false, true}) {
      const auto v = values(members, comet);
      if (v.empty()) continue;
      curves << key_fields(key) << ',' << (comet ? "comet" : "bleu") << ',' << v.size() << ','
             << format_double(mean(v)) << ',' << format_double(stddev(v)) << '\n';
    }
  }

  auto latency = open_out(dir / "latency.csv");
  latency << "direction,template,strategy,k,seed,sample,tokens,seconds_per_token\n";
  for (const auto& r : report.rows) {
    if (!r.error.empty()) continue;
    latency << key_fields({r.direction, r.template_desc, r.strategy, r.k}) << ',' << r.seed << ','
            << (r.sample ? std::to_string(*r.sample) : "") << ',' << r.tokens << ','
            << format_double(r.seconds_per_token()) << '\n';
  }
}

}  // namespace mtprompt
