#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtprompt/corpus.hpp"

namespace mtprompt {

/// Template rows A-F:
///   A  [src]: [input] ◇ [tgt]:
///   B  [input] ◇ [tgt]:
///   C  [input] ◇ Translate to [tgt]:
///   D  [input] ◇ Translate from [src] to [tgt]:
///   E  [src]: [input] ◇ Translate to [tgt]:
///   F  [src]: [input] ◇ Translate from [src] to [tgt]:
/// ◇ is a single space, or "\n" in line-break mode.
enum class TemplateId { A, B, C, D, E, F };

/// Language the template's fixed phrases are written in.
enum class TemplateLanguage { English, German, Chinese };

inline constexpr TemplateId kAllTemplateIds[] = {TemplateId::A, TemplateId::B, TemplateId::C,
                                                 TemplateId::D, TemplateId::E, TemplateId::F};
inline constexpr TemplateLanguage kAllTemplateLanguages[] = {
    TemplateLanguage::English, TemplateLanguage::German, TemplateLanguage::Chinese};

std::string_view to_string(TemplateId id);
std::string_view to_string(TemplateLanguage lang);
TemplateId parse_template_id(std::string_view text);
TemplateLanguage parse_template_language(std::string_view text);

struct PromptTemplate {
  TemplateId id = TemplateId::A;
  TemplateLanguage language = TemplateLanguage::English;
  bool line_break = false;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

/// "A/English/inline" or "A/English/break".
std::string describe(const PromptTemplate& t);

/// Ordered prompt examples. `prompt_pair` may differ from the test pair
/// (cross-lingual transfer).
struct Demonstration {
  std::vector<ParallelExample> examples;
  LanguagePair prompt_pair;
};

/// Display names and instruction phrases per template language.
///
/// Text format, one entry per line, '#' comments:
///   name.<code>.<TemplateLanguage> = <display name>
///   label_sep.<TemplateLanguage>   = "<separator after a language label>"
///   translate_to.<TemplateLanguage>   = <phrase with {tgt}>
///   translate_from.<TemplateLanguage> = <phrase with {src} and {tgt}>
/// Values may be wrapped in double quotes to keep surrounding spaces.
class LanguageNameTable {
 public:
  /// Table equal to config/languages.conf (en, de, zh, fr).
  static LanguageNameTable builtin();
  static LanguageNameTable parse(std::string_view content);
  static LanguageNameTable load(const std::filesystem::path& path);

  /// Throws ConfigError when the code has no name for `lang`.
  const std::string& name(const LangCode& code, TemplateLanguage lang) const;
  const std::string& label_separator(TemplateLanguage lang) const;
  /// "Translate to English"
  std::string translate_to(const LangCode& tgt, TemplateLanguage lang) const;
  /// "Translate from German to English"
  std::string translate_from(const LangCode& src, const LangCode& tgt, TemplateLanguage lang) const;

  /// Codes that have a name in every template language.
  std::vector<LangCode> complete_codes() const;

  friend bool operator==(const LanguageNameTable&, const LanguageNameTable&) = default;

 private:
  const std::string& phrase(const std::map<TemplateLanguage, std::string>& m, TemplateLanguage lang,
                            std::string_view what) const;

  std::map<std::pair<std::string, TemplateLanguage>, std::string> names_;
  std::map<TemplateLanguage, std::string> label_sep_;
  std::map<TemplateLanguage, std::string> translate_to_;
  std::map<TemplateLanguage, std::string> translate_from_;
};

enum class OneSidedMode { source_only, target_only };

class PromptRenderer {
 public:
  explicit PromptRenderer(LanguageNameTable names = LanguageNameTable::builtin());

  /// Zero-shot prompt ending with the target cue, e.g. "German: Hallo English: ".
  std::string render_zero_shot(const PromptTemplate& t, const LanguagePair& pair, std::string_view input) const;

  /// A completed example block including the trailing block separator.
  std::string render_example_block(const PromptTemplate& t, const ParallelExample& example,
                                   const LanguagePair& prompt_pair) const;

  /// The example rendered as a finished 1-shot block without the trailing separator.
  std::string render_completed(const PromptTemplate& t, const ParallelExample& example) const;

  /// Example blocks in order, then the zero-shot test block.
  std::string render_few_shot(const PromptTemplate& t, const LanguagePair& test_pair, const Demonstration& demo,
                              std::string_view input) const;

  /// Monolingual demonstrations: "[psrc]<sep>X′" (or "[ptgt]<sep>Y′") blocks, then the test block.
  std::string render_one_sided(const PromptTemplate& t, const LanguagePair& test_pair,
                               const std::vector<MonolingualExample>& mono, OneSidedMode side,
                               std::string_view input) const;

  /// Stop strings for decoding: "\n" and the source-language cue (e.g. "German:").
  std::vector<std::string> stop_sequences(const PromptTemplate& t, const LanguagePair& pair) const;

  /// Separator at the ◇ position and between blocks.
  static std::string_view separator(const PromptTemplate& t) { return t.line_break ? "\n" : " "; }

  const LanguageNameTable& names() const noexcept { return names_; }

 private:
  std::string label(const LangCode& code, TemplateLanguage lang) const;

  LanguageNameTable names_;
};

}  // namespace mtprompt
