#include "mtprompt/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "mtprompt/errors.hpp"
#include "mtprompt/rng.hpp"
#include "mtprompt/text.hpp"

namespace mtprompt {

using json = nlohmann::json;

LangCode::LangCode(std::string code) : code_(std::move(code)) {
  if (code_.empty()) throw std::invalid_argument("LangCode: empty code");
  for (char c : code_) {
    if (c == '-' || text::is_unicode_space(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("LangCode: invalid code '" + code_ + "'");
    }
  }
}

LanguagePair::LanguagePair(LangCode src, LangCode tgt) : src_(std::move(src)), tgt_(std::move(tgt)) {
  if (src_ == tgt_) throw std::invalid_argument("LanguagePair: source equals target (" + src_.str() + ")");
}

LanguagePair LanguagePair::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || text.find('-', dash + 1) != std::string_view::npos) {
    throw std::invalid_argument("LanguagePair: expected 'src-tgt', got '" + std::string(text) + "'");
  }
  return {LangCode(std::string(text.substr(0, dash))), LangCode(std::string(text.substr(dash + 1)))};
}

std::string_view to_string(PoolTier tier) {
  return tier == PoolTier::high_quality ? "high_quality" : "low_quality";
}

PoolTier parse_tier(std::string_view text) {
  if (text == "high_quality" || text == "high") return PoolTier::high_quality;
  if (text == "low_quality" || text == "low") return PoolTier::low_quality;
  throw std::invalid_argument("unknown pool tier '" + std::string(text) + "'");
}

PoolFormat parse_pool_format(std::string_view text) {
  if (text == "jsonl") return PoolFormat::jsonl;
  if (text == "tsv") return PoolFormat::tsv;
  throw std::invalid_argument("unknown pool format '" + std::string(text) + "'");
}

ExamplePool::ExamplePool(LanguagePair pair, PoolTier tier, std::vector<ParallelExample> examples)
    : pair_(std::move(pair)), tier_(tier), examples_(std::move(examples)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& ex : examples_) {
    if (!(ex.pair == pair_)) {
      throw std::invalid_argument("ExamplePool: example '" + ex.id + "' has pair " + ex.pair.str() +
                                  ", pool is " + pair_.str());
    }
    if (!seen.insert(ex.id).second) {
      throw std::invalid_argument("ExamplePool: duplicate id '" + ex.id + "'");
    }
  }
}

const ParallelExample* ExamplePool::find(std::string_view id) const {
  for (const auto& ex : examples_) {
    if (ex.id == id) return &ex;
  }
  return nullptr;
}

namespace {

std::string line_id(std::string_view source_name, std::size_t line_no) {
  return std::string(source_name) + ":" + std::to_string(line_no);
}

void require_text(std::string_view s, std::string_view field, std::size_t line_no) {
  if (text::is_blank(s)) throw ParseError("empty " + std::string(field) + " text", line_no);
}

std::string json_string(const json& obj, const char* key, std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("missing or non-string field \"") + key + "\"", line_no);
  }
  return it->get<std::string>();
}

json parse_json_line(std::string_view line, std::size_t line_no) {
  try {
    auto obj = json::parse(line);
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
    return obj;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

ExamplePool parse_pool(std::istream& in, std::string_view source_name, PoolFormat format,
                       const LanguagePair& pair, PoolTier tier) {
  std::vector<ParallelExample> examples;
  std::unordered_set<std::string> ids;
  std::string raw;
  std::size_t line_no = 0;
  while (text::read_line(in, raw)) {
    ++line_no;
    const std::string_view line = raw;
    ParallelExample ex{.id = {}, .source_text = {}, .target_text = {}, .pair = pair};
    if (format == PoolFormat::tsv) {
      const auto fields = text::split(line, '\t');
      if (fields.size() == 2) {
        ex.source_text = fields[0];
        ex.target_text = fields[1];
      } else if (fields.size() == 3) {
        // score \t src \t tgt; the alignment score is not used.
        ex.source_text = fields[1];
        ex.target_text = fields[2];
      } else {
        throw ParseError("expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()),
                         line_no);
      }
      ex.id = line_id(source_name, line_no);
    } else {
      const auto obj = parse_json_line(line, line_no);
      ex.source_text = json_string(obj, "src", line_no);
      ex.target_text = json_string(obj, "tgt", line_no);
      if (const auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("\"id\" must be a string", line_no);
        ex.id = it->get<std::string>();
      } else {
        ex.id = line_id(source_name, line_no);
      }
    }
    require_text(ex.source_text, "source", line_no);
    require_text(ex.target_text, "target", line_no);
    if (!ids.insert(ex.id).second) throw ParseError("duplicate id '" + ex.id + "'", line_no);
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw EmptyPoolError("pool '" + std::string(source_name) + "' is empty");
  return ExamplePool(pair, tier, std::move(examples));
}

ExamplePool load_pool(const std::filesystem::path& path, PoolFormat format, const LanguagePair& pair,
                      PoolTier tier) {
  auto in = open_input(path);
  return parse_pool(in, path.filename().string(), format, pair, tier);
}

void write_pool(std::ostream& out, const ExamplePool& pool, PoolFormat format) {
  for (const auto& ex : pool.examples()) {
    if (format == PoolFormat::tsv) {
      out << ex.source_text << '\t' << ex.target_text << '\n';
    } else {
      json obj{{"id", ex.id}, {"src", ex.source_text}, {"tgt", ex.target_text}};
      out << obj.dump() << '\n';
    }
  }
}

std::vector<MonolingualExample> parse_monolingual(std::istream& in, std::string_view source_name,
                                                  const LangCode& lang) {
  std::vector<MonolingualExample> out;
  std::string raw;
  std::size_t line_no = 0;
  while (text::read_line(in, raw)) {
    ++line_no;
    const std::string_view line = raw;
    require_text(line, "monolingual", line_no);
    out.push_back({line_id(source_name, line_no), std::string(line), lang});
  }
  return out;
}

std::vector<MonolingualExample> load_monolingual(const std::filesystem::path& path, const LangCode& lang) {
  auto in = open_input(path);
  return parse_monolingual(in, path.filename().string(), lang);
}

DocumentCorpus parse_documents(std::istream& in, std::string_view source_name, const LanguagePair& pair) {
  DocumentCorpus corpus;
  std::string raw;
  std::size_t line_no = 0;
  while (text::read_line(in, raw)) {
    ++line_no;
    const auto obj = parse_json_line(raw, line_no);
    Document doc;
    doc.doc_id = json_string(obj, "doc_id", line_no);
    const auto it = obj.find("sentences");
    if (it == obj.end() || !it->is_array()) throw ParseError("missing \"sentences\" array", line_no);
    std::size_t sent_no = 0;
    for (const auto& s : *it) {
      if (!s.is_object()) throw ParseError("sentence entries must be objects", line_no);
      ParallelExample ex{.id = doc.doc_id + ":" + std::to_string(++sent_no),
                         .source_text = json_string(s, "src", line_no),
                         .target_text = json_string(s, "tgt", line_no),
                         .pair = pair};
      require_text(ex.source_text, "source", line_no);
      require_text(ex.target_text, "target", line_no);
      doc.sentences.push_back(std::move(ex));
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw EmptyPoolError("document file '" + std::string(source_name) + "' is empty");
  }
  return corpus;
}

DocumentCorpus load_documents(const std::filesystem::path& path, const LanguagePair& pair) {
  auto in = open_input(path);
  return parse_documents(in, path.filename().string(), pair);
}

AblationSplit split_ablation(const ExamplePool& pool, std::size_t n_test, std::uint64_t seed) {
  if (n_test >= pool.size()) {
    throw std::invalid_argument("split_ablation: n_test (" + std::to_string(n_test) +
                                ") must be smaller than the pool (" + std::to_string(pool.size()) + ")");
  }
  std::vector<std::string_view> ids;
  ids.reserve(pool.size());
  for (const auto& ex : pool.examples()) ids.push_back(ex.id);
  std::sort(ids.begin(), ids.end());

  Rng rng(seed);
  std::unordered_set<std::string_view> held_out;
  for (auto i : rng.sample_indices(ids.size(), n_test)) held_out.insert(ids[i]);

  std::vector<ParallelExample> test_set;
  std::vector<ParallelExample> rest;
  test_set.reserve(n_test);
  rest.reserve(pool.size() - n_test);
  for (const auto& ex : pool.examples()) {
    (held_out.contains(ex.id) ? test_set : rest).push_back(ex);
  }
  return {std::move(test_set), ExamplePool(pool.pair(), pool.tier(), std::move(rest))};
}

DocumentCorpus chunk_documents(const DocumentCorpus& corpus, std::size_t chunk_size) {
  DocumentCorpus out;
  for (const auto& doc : corpus.documents) {
    std::size_t n = 0;
    for (auto& chunk : chunk_document(doc.sentences, chunk_size)) {
      out.documents.push_back({doc.doc_id + "#" + std::to_string(++n), std::move(chunk)});
    }
  }
  return out;
}

}  // namespace mtprompt
