#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <fstream>

#include "mtprompt/errors.hpp"
#include "mtprompt/metrics.hpp"
#include "mtprompt/mock_backend.hpp"
#include "mtprompt/text.hpp"
#include "test_util.hpp"

namespace mtprompt {
namespace {

using json = nlohmann::json;

struct Fixture {
  std::vector<std::string> hyps, refs;
};

Fixture load_fixture(const std::string& name) {
  Fixture f;
  std::ifstream in(testing::data_dir() / name);
  std::string line;
  while (std::getline(in, line)) {
    const auto parts = text::split(line, '\t');
    f.hyps.emplace_back(parts.at(0));
    f.refs.emplace_back(parts.at(1));
  }
  return f;
}

const json& oracle() {
  static const json j = [] {
    std::ifstream in(testing::data_dir() / "bleu_oracle.json");
    return json::parse(in);
  }();
  return j;
}

BleuConfig config_for(const json& entry, BleuSmoothing smoothing) {
  BleuConfig cfg;
  cfg.tokenizer = entry["tokenizer"] == "zh" ? BleuTokenizer::zh_character : BleuTokenizer::intl_13a;
  cfg.smoothing = smoothing;
  return cfg;
}

class BleuFixture : public ::testing::TestWithParam<std::string> {};

TEST_P(BleuFixture, TokenizationMatchesOracle) {
  const auto& entry = oracle()["fixtures"][GetParam()];
  const auto f = load_fixture(GetParam());
  const auto tok = config_for(entry, BleuSmoothing::none).tokenizer;
  for (std::size_t i = 0; i < f.hyps.size(); ++i) {
    EXPECT_EQ(tokenize(text::rtrim(f.hyps[i]), tok), entry["tokenized_hyps"][i].get<std::string>()) << i;
    EXPECT_EQ(tokenize(text::rtrim(f.refs[i]), tok), entry["tokenized_refs"][i].get<std::string>()) << i;
  }
}

TEST_P(BleuFixture, CorpusStatisticsMatchOracle) {
  const auto& entry = oracle()["fixtures"][GetParam()];
  const auto f = load_fixture(GetParam());
  for (const auto& [name, smoothing] : {std::pair{"none", BleuSmoothing::none}, std::pair{"exp", BleuSmoothing::exp}}) {
    const auto& want = entry[name];
    const auto got = corpus_bleu_detail(f.hyps, f.refs, config_for(entry, smoothing));
    EXPECT_NEAR(got.score, want["score"].get<double>(), 1e-9) << name;
    EXPECT_EQ(got.correct, want["counts"].get<std::vector<std::size_t>>());
    EXPECT_EQ(got.total, want["totals"].get<std::vector<std::size_t>>());
    EXPECT_EQ(got.sys_len, want["sys_len"].get<std::size_t>());
    EXPECT_EQ(got.ref_len, want["ref_len"].get<std::size_t>());
    EXPECT_NEAR(got.brevity_penalty, want["bp"].get<double>(), 1e-12);
  }
}

TEST_P(BleuFixture, SentenceScoresMatchOracle) {
  const auto& entry = oracle()["fixtures"][GetParam()];
  const auto f = load_fixture(GetParam());
  for (std::size_t i = 0; i < f.hyps.size(); ++i) {
    EXPECT_NEAR(corpus_bleu({f.hyps[i]}, {f.refs[i]}, config_for(entry, BleuSmoothing::none)),
                entry["segments"][i].get<double>(), 1e-9)
        << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Fixtures, BleuFixture, ::testing::Values("bleu_latin.tsv", "bleu_zh.tsv"),
                         [](const auto& info) { return info.param == "bleu_zh.tsv" ? "zh" : "latin"; });

TEST(Bleu, DocumentLevelMatchesOracle) {
  for (const auto& [name, key, lang] : {std::tuple{"bleu_latin.tsv", "doc_bleu_latin_4_6", "en"},
                                        std::tuple{"bleu_zh.tsv", "doc_bleu_zh_4_6", "zh"}}) {
    const auto f = load_fixture(name);
    std::vector<DocumentTranslation> docs(2);
    for (std::size_t i = 0; i < f.hyps.size(); ++i) {
      docs[i < 4 ? 0 : 1].hyps.push_back(f.hyps[i]);
      docs[i < 4 ? 0 : 1].refs.push_back(f.refs[i]);
    }
    EXPECT_NEAR(doc_bleu(docs, BleuConfig::for_target(LangCode(lang))), oracle()[key].get<double>(), 1e-9) << key;
  }
}

TEST(Bleu, IdentityAndEmpty) {
  const std::vector<std::string> refs{"The quick brown fox jumps over the lazy dog.", "A second sentence here."};
  EXPECT_NEAR(corpus_bleu(refs, refs), 100.0, 1e-9);
  EXPECT_EQ(corpus_bleu({"", ""}, refs), 0.0);
  EXPECT_THROW(corpus_bleu({"a"}, refs), std::invalid_argument);
}

TEST(Bleu, Signature) {
  EXPECT_EQ(BleuConfig{}.signature(), "nrefs:1|case:mixed|eff:no|tok:13a|smooth:none|ngram:4");
  EXPECT_EQ(BleuConfig::for_target(LangCode("zh")).tokenizer, BleuTokenizer::zh_character);
  EXPECT_EQ(BleuConfig::for_target(LangCode("de")).tokenizer, BleuTokenizer::intl_13a);
}

TEST(Bleu, Tokenizer13aSamples) {
  EXPECT_EQ(tokenize_13a("Hello, world!"), "Hello , world !");
  EXPECT_EQ(tokenize_13a("It costs $3,500.25."), "It costs $ 3,500.25 .");
  EXPECT_EQ(tokenize_13a("a&amp;b"), "a & b");
}

TEST(Ranks, TiesAveraged) {
  const std::vector<double> v{10, 20, 20, 5, 20};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 4, 4, 1, 4}));
}

TEST(Spearman, TiedFixture) {
  const std::vector<double> x{1, 2, 2, 3}, y{1, 3, 2, 4};
  const auto r = spearman(x, y);
  // Pearson of ranks (1, 2.5, 2.5, 4) and (1, 3, 2, 4): 4.5 / sqrt(4.5 * 5).
  EXPECT_NEAR(r.rho, 4.5 / std::sqrt(22.5), 1e-12);
  ASSERT_TRUE(r.p_value);
  // With two degrees of freedom the two-sided t tail is 1 - t / sqrt(2 + t^2).
  const double t = r.rho * std::sqrt(2.0 / (1.0 - r.rho * r.rho));
  EXPECT_NEAR(*r.p_value, 1.0 - t / std::sqrt(2.0 + t * t), 1e-9);
  EXPECT_EQ(r.n, 4u);
  // Four of the 24 orderings of y reach |rho| >= observed.
  EXPECT_NEAR(spearman_permutation_p(x, y), 4.0 / 24.0, 1e-12);
}

TEST(Spearman, PerfectMonotone) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 8, 16, 1000};
  EXPECT_NEAR(spearman(x, y).rho, 1.0, 1e-12);
  const std::vector<double> z{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, z).rho, -1.0, 1e-12);
  EXPECT_NEAR(*spearman(x, y).p_value, 0.0, 1e-9);
}

TEST(Spearman, Undefined) {
  const std::vector<double> x{1, 2, 3}, c{7, 7, 7};
  EXPECT_THROW(spearman(x, c), UndefinedCorrelationError);
  const std::vector<double> two{1, 2};
  EXPECT_THROW(spearman(two, two), std::invalid_argument);
  EXPECT_THROW(spearman(x, two), std::invalid_argument);
}

TEST(Stats, MeanSdQuantile) {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  EXPECT_DOUBLE_EQ(mean(v), 31.0 / 8.0);
  EXPECT_NEAR(stddev(v), 2.748376143938713, 1e-12);
  // numpy.quantile defaults on the same values.
  EXPECT_NEAR(quantile(v, 0.25), 1.75, 1e-12);
  EXPECT_NEAR(quantile(v, 0.5), 3.5, 1e-12);
  EXPECT_NEAR(quantile(v, 0.9), 6.9, 1e-12);
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 1.0), 9.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Comet, BatchMeanAndDegradation) {
  MockBackend m;
  m.set_comet_fn([](const std::string&, const std::string& hyp, const std::string&) {
    return static_cast<double>(hyp.size()) / 10.0;
  });
  const auto r = comet_batch({"s", "s", "s"}, {"a", "abc", ""}, {"r", "r", "r"}, m, 2);
  ASSERT_TRUE(r.mean);
  EXPECT_NEAR(*r.mean, 0.4 / 3.0, 1e-12);
  EXPECT_EQ(r.segments, (std::vector<double>{0.1, 0.3, 0.0}));
  m.set_comet_available(false);
  const auto d = comet_batch({"s"}, {"a"}, {"r"}, m);
  EXPECT_FALSE(d.mean);
  EXPECT_FALSE(d.warning.empty());
}

}  // namespace
}  // namespace mtprompt
