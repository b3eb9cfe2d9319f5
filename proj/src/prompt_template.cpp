#include "mtprompt/prompt_template.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mtprompt/errors.hpp"
#include "mtprompt/text.hpp"
#include "languages_conf.inc"

namespace mtprompt {

std::string_view to_string(TemplateId id) {
  static constexpr std::string_view kNames[] = {"A", "B", "C", "D", "E", "F"};
  return kNames[static_cast<int>(id)];
}

std::string_view to_string(TemplateLanguage lang) {
  switch (lang) {
    case TemplateLanguage::English: return "English";
    case TemplateLanguage::German: return "German";
    case TemplateLanguage::Chinese: return "Chinese";
  }
  return "?";
}

TemplateId parse_template_id(std::string_view text) {
  for (auto id : kAllTemplateIds) {
    if (to_string(id) == text) return id;
  }
  throw std::invalid_argument("unknown template id '" + std::string(text) + "'");
}

TemplateLanguage parse_template_language(std::string_view text) {
  for (auto lang : kAllTemplateLanguages) {
    if (to_string(lang) == text) return lang;
  }
  if (text == "en") return TemplateLanguage::English;
  if (text == "de") return TemplateLanguage::German;
  if (text == "zh") return TemplateLanguage::Chinese;
  throw std::invalid_argument("unknown template language '" + std::string(text) + "'");
}

std::string describe(const PromptTemplate& t) {
  return std::string(to_string(t.id)) + "/" + std::string(to_string(t.language)) + "/" +
         (t.line_break ? "break" : "inline");
}

// ---------------------------------------------------------------------------

namespace {

std::string substitute(std::string pattern, std::string_view key, std::string_view value) {
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos + value.size())) {
    pattern.replace(pos, key.size(), value);
  }
  return pattern;
}

std::string unquote(std::string_view v, std::size_t line_no) {
  v = text::trim(v);
  if (!v.empty() && v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ParseError("unterminated quoted value", line_no);
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

}  // namespace

LanguageNameTable LanguageNameTable::builtin() {
  static const LanguageNameTable table = parse(kBuiltinLanguagesConf);
  return table;
}

LanguageNameTable LanguageNameTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open language table '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

LanguageNameTable LanguageNameTable::parse(std::string_view content) {
  LanguageNameTable table;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = std::string(text::trim(line.substr(0, eq)));
    auto value = unquote(line.substr(eq + 1), line_no);
    const auto parts = text::split(key, '.');
    try {
      if (parts.size() == 3 && parts[0] == "name") {
        table.names_[{std::string(parts[1]), parse_template_language(parts[2])}] = std::move(value);
      } else if (parts.size() == 2 && parts[0] == "label_sep") {
        table.label_sep_[parse_template_language(parts[1])] = std::move(value);
      } else if (parts.size() == 2 && parts[0] == "translate_to") {
        table.translate_to_[parse_template_language(parts[1])] = std::move(value);
      } else if (parts.size() == 2 && parts[0] == "translate_from") {
        table.translate_from_[parse_template_language(parts[1])] = std::move(value);
      } else {
        throw ParseError("unknown key '" + key + "'", line_no);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  for (auto lang : kAllTemplateLanguages) {
    for (const auto* m : {&table.label_sep_, &table.translate_to_, &table.translate_from_}) {
      if (!m->contains(lang)) {
        throw ConfigError("language table lacks phrases for template language " +
                          std::string(to_string(lang)));
      }
    }
  }
  return table;
}

const std::string& LanguageNameTable::name(const LangCode& code, TemplateLanguage lang) const {
  const auto it = names_.find({code.str(), lang});
  if (it == names_.end()) {
    throw ConfigError("no " + std::string(to_string(lang)) + " name for language '" + code.str() + "'");
  }
  return it->second;
}

const std::string& LanguageNameTable::phrase(const std::map<TemplateLanguage, std::string>& m,
                                             TemplateLanguage lang, std::string_view what) const {
  const auto it = m.find(lang);
  if (it == m.end()) {
    throw ConfigError("no " + std::string(what) + " phrase for " + std::string(to_string(lang)));
  }
  return it->second;
}

const std::string& LanguageNameTable::label_separator(TemplateLanguage lang) const {
  return phrase(label_sep_, lang, "label_sep");
}

std::string LanguageNameTable::translate_to(const LangCode& tgt, TemplateLanguage lang) const {
  return substitute(phrase(translate_to_, lang, "translate_to"), "{tgt}", name(tgt, lang));
}

std::string LanguageNameTable::translate_from(const LangCode& src, const LangCode& tgt,
                                              TemplateLanguage lang) const {
  auto s = substitute(phrase(translate_from_, lang, "translate_from"), "{src}", name(src, lang));
  return substitute(std::move(s), "{tgt}", name(tgt, lang));
}

std::vector<LangCode> LanguageNameTable::complete_codes() const {
  std::map<std::string, int> counts;
  for (const auto& [key, _] : names_) ++counts[key.first];
  std::vector<LangCode> out;
  for (const auto& [code, n] : counts) {
    if (n == static_cast<int>(std::size(kAllTemplateLanguages))) out.emplace_back(code);
  }
  return out;
}

// ---------------------------------------------------------------------------

PromptRenderer::PromptRenderer(LanguageNameTable names) : names_(std::move(names)) {}

std::string PromptRenderer::label(const LangCode& code, TemplateLanguage lang) const {
  return names_.name(code, lang) + names_.label_separator(lang);
}

std::string PromptRenderer::render_zero_shot(const PromptTemplate& t, const LanguagePair& pair,
                                             std::string_view input) const {
  if (input.empty()) throw std::invalid_argument("render_zero_shot: empty input");
  const auto lang = t.language;
  std::string out;
  if (t.id == TemplateId::A || t.id == TemplateId::E || t.id == TemplateId::F) {
    out += label(pair.src(), lang);
  }
  out += input;
  out += separator(t);
  switch (t.id) {
    case TemplateId::A:
    case TemplateId::B:
      out += label(pair.tgt(), lang);
      break;
    case TemplateId::C:
    case TemplateId::E:
      out += names_.translate_to(pair.tgt(), lang) + names_.label_separator(lang);
      break;
    case TemplateId::D:
    case TemplateId::F:
      out += names_.translate_from(pair.src(), pair.tgt(), lang) + names_.label_separator(lang);
      break;
  }
  return out;
}

std::string PromptRenderer::render_completed(const PromptTemplate& t, const ParallelExample& example) const {
  return render_zero_shot(t, example.pair, example.source_text) + example.target_text;
}

std::string PromptRenderer::render_example_block(const PromptTemplate& t, const ParallelExample& example,
                                                 const LanguagePair& prompt_pair) const {
  return render_zero_shot(t, prompt_pair, example.source_text) + example.target_text +
         std::string(separator(t));
}

std::string PromptRenderer::render_few_shot(const PromptTemplate& t, const LanguagePair& test_pair,
                                            const Demonstration& demo, std::string_view input) const {
  std::string out;
  for (const auto& ex : demo.examples) {
    if (!(ex.pair == demo.prompt_pair)) {
      throw std::invalid_argument("render_few_shot: example '" + ex.id + "' is " + ex.pair.str() +
                                  ", demonstration is " + demo.prompt_pair.str());
    }
    out += render_example_block(t, ex, demo.prompt_pair);
  }
  out += render_zero_shot(t, test_pair, input);
  return out;
}

std::string PromptRenderer::render_one_sided(const PromptTemplate& t, const LanguagePair& test_pair,
                                             const std::vector<MonolingualExample>& mono, OneSidedMode side,
                                             std::string_view input) const {
  const auto& expected = side == OneSidedMode::source_only ? test_pair.src() : test_pair.tgt();
  std::string out;
  for (const auto& ex : mono) {
    if (!(ex.lang == expected)) {
      throw std::invalid_argument("render_one_sided: example '" + ex.id + "' is '" + ex.lang.str() + "', " +
                                  (side == OneSidedMode::source_only ? "source" : "target") +
                                  " side expects '" + expected.str() + "'");
    }
    out += label(ex.lang, t.language);
    out += ex.text;
    out += separator(t);
  }
  out += render_zero_shot(t, test_pair, input);
  return out;
}

std::vector<std::string> PromptRenderer::stop_sequences(const PromptTemplate& t, const LanguagePair& pair) const {
  return {"\n", std::string(text::rtrim(label(pair.src(), t.language)))};
}

}  // namespace mtprompt
