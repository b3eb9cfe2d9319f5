#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mtprompt/augment.hpp"
#include "mtprompt/errors.hpp"
#include "mtprompt/mock_backend.hpp"

namespace mtprompt {
namespace {

const LanguagePair kDeEn = LanguagePair::parse("de-en");

std::vector<MonolingualExample> mono(const std::string& prefix, std::size_t n, const std::string& lang) {
  std::vector<MonolingualExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({prefix + std::to_string(i), prefix + " sentence " + std::to_string(i), LangCode(lang)});
  }
  return out;
}

/// Teaches `m` to answer "T(<input>)" to each text's zero-shot prompt.
void add_translations(MockBackend& m, const PromptRenderer& r, const LanguagePair& pair,
                      const std::vector<MonolingualExample>& texts) {
  for (const auto& t : texts) m.add_generation(r.render_zero_shot({}, pair, t.text), "T(" + t.text + ")\nnoise");
}

TEST(Provenance, Names) {
  for (auto p : {Provenance::random_pair, Provenance::forward_translated, Provenance::back_translated}) {
    EXPECT_EQ(parse_provenance(to_string(p)), p);
  }
  EXPECT_THROW(parse_provenance("made_up"), std::invalid_argument);
}

TEST(TranslationRequest, Decoding) {
  const PromptRenderer r;
  const auto req = translation_request(r, {}, kDeEn, "Hallo");
  EXPECT_EQ(req.prompt, "German: Hallo English: ");
  EXPECT_EQ(req.beam_size, 2);
  EXPECT_EQ(req.max_new_tokens, 256);
  EXPECT_EQ(req.stop_sequences, r.stop_sequences({}, kDeEn));
}

TEST(RandomPairs, IndependentSides) {
  const auto src = mono("de", 20, "de");
  const auto tgt = mono("en", 20, "en");
  const auto d = build_random_pairs(src, tgt, kDeEn, 6, 3);
  ASSERT_EQ(d.examples.size(), 6u);
  std::set<std::string> seen;
  for (const auto& e : d.examples) {
    EXPECT_EQ(e.provenance, Provenance::random_pair);
    EXPECT_EQ(e.example.source_text.rfind("de ", 0), 0u);
    EXPECT_EQ(e.example.target_text.rfind("en ", 0), 0u);
    EXPECT_EQ(e.example.id.rfind("rp:", 0), 0u);
    seen.insert(e.example.id);
  }
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_EQ(build_random_pairs(src, tgt, kDeEn, 6, 3).examples[2].example.id, d.examples[2].example.id);
  EXPECT_THROW(build_random_pairs(src, mono("en", 3, "en"), kDeEn, 6, 3), std::invalid_argument);
}

TEST(BackTranslation, TargetsAreRealText) {
  const PromptRenderer r;
  const auto tgt = mono("en", 30, "en");
  MockBackend m;
  add_translations(m, r, kDeEn.reversed(), tgt);
  const auto d = build_back_translated(tgt, kDeEn, r, m, 8, 5);
  ASSERT_EQ(d.examples.size(), 8u);
  EXPECT_EQ(d.pair, kDeEn);
  for (const auto& e : d.examples) {
    EXPECT_EQ(e.provenance, Provenance::back_translated);
    EXPECT_EQ(e.example.source_text, "T(" + e.example.target_text + ")");
    EXPECT_EQ(e.example.pair, kDeEn);
    EXPECT_EQ(e.example.id.rfind("bt:", 0), 0u);
  }
  const auto demo = d.as_demonstration();
  EXPECT_EQ(demo.prompt_pair, kDeEn);
  EXPECT_EQ(demo.examples.size(), 8u);
}

TEST(ForwardTranslation, SourcesAreRealText) {
  const PromptRenderer r;
  const auto src = mono("de", 10, "de");
  MockBackend m;
  add_translations(m, r, kDeEn, src);
  const auto d = build_forward_translated(src, kDeEn, r, m, 4, 1, AugmentOptions{{}, 3});
  ASSERT_EQ(d.examples.size(), 4u);
  for (const auto& e : d.examples) {
    EXPECT_EQ(e.provenance, Provenance::forward_translated);
    EXPECT_EQ(e.example.target_text, "T(" + e.example.source_text + ")");
  }
}

TEST(BackTranslation, BlankOutputsReplaced) {
  const PromptRenderer r;
  const auto tgt = mono("en", 6, "en");
  MockBackend m;
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    m.add_generation(r.render_zero_shot({}, kDeEn.reversed(), tgt[i].text), i % 2 ? "ok" : "\nblank");
  }
  const auto d = build_back_translated(tgt, kDeEn, r, m, 3, 2);
  EXPECT_EQ(d.examples.size(), 3u);
  for (const auto& e : d.examples) EXPECT_EQ(e.example.source_text, "ok");
  EXPECT_THROW(build_back_translated(tgt, kDeEn, r, m, 4, 2), Error);
}

TEST(BackTranslation, Validation) {
  const PromptRenderer r;
  MockBackend m(false);
  EXPECT_THROW(build_back_translated(mono("de", 5, "de"), kDeEn, r, m, 2, 0), std::invalid_argument);
  EXPECT_THROW(build_back_translated(mono("en", 5, "en"), kDeEn, r, m, 0, 0), std::invalid_argument);
  EXPECT_THROW(build_back_translated(mono("en", 1, "en"), kDeEn, r, m, 2, 0), std::invalid_argument);
}

TEST(AugmentedJsonl, RoundTrip) {
  AugmentedDemonstration d{{}, kDeEn};
  d.examples.push_back({{"bt:1", "Hallo", "Hello", kDeEn},
                        Provenance::back_translated,
                        {TemplateId::B, TemplateLanguage::German, true}});
  d.examples.push_back({{"rp:a|b", "Ja", "No", kDeEn}, Provenance::random_pair, {}});
  std::stringstream ss;
  write_augmented_jsonl(ss, d);
  const auto back = read_augmented_jsonl(ss);
  ASSERT_EQ(back.examples.size(), 2u);
  EXPECT_EQ(back.pair, kDeEn);
  EXPECT_EQ(back.examples[0].provenance, Provenance::back_translated);
  EXPECT_EQ(back.examples[0].generator_template, (PromptTemplate{TemplateId::B, TemplateLanguage::German, true}));
  EXPECT_EQ(back.examples[1].example.id, "rp:a|b");
  EXPECT_EQ(back.examples[1].example.target_text, "No");
}

TEST(AugmentedJsonl, BadLineReported) {
  std::istringstream in("{\"id\":\"x\"}\n");
  try {
    read_augmented_jsonl(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

}  // namespace
}  // namespace mtprompt
