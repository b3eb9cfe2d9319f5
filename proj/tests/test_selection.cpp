#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mtprompt/selection.hpp"
#include "test_util.hpp"

namespace mtprompt {
namespace {

using testing::words;

const LanguagePair kDeEn = LanguagePair::parse("de-en");

/// Examples "e00".."e{n-1}" whose source and target have `len(i)` tokens.
ExamplePool pool_of(std::size_t n, const std::function<std::size_t(std::size_t)>& len) {
  std::vector<ParallelExample> ex;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = (i < 10 ? "e0" : "e") + std::to_string(i);
    ex.push_back({id, words("s" + std::to_string(i) + "_", len(i)), words("t" + std::to_string(i) + "_", len(i)),
                  kDeEn});
  }
  return ExamplePool(kDeEn, PoolTier::high_quality, ex);
}

std::vector<std::string> ids(const Demonstration& d) {
  std::vector<std::string> out;
  for (const auto& e : d.examples) out.push_back(e.id);
  return out;
}

TEST(LengthFilter, InclusiveOnBothSides) {
  std::vector<ParallelExample> ex{{"a", words("x", 9), words("y", 10), kDeEn},
                                  {"b", words("x", 10), words("y", 10), kDeEn},
                                  {"c", words("x", 100), words("y", 100), kDeEn},
                                  {"d", words("x", 50), words("y", 101), kDeEn}};
  const ExamplePool pool(kDeEn, PoolTier::high_quality, ex);
  const auto kept = length_filter(pool, SelectionParams{});
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "b");
  EXPECT_EQ(kept[1].id, "c");
}

TEST(Random, DeterministicAndDistinct) {
  const auto pool = pool_of(40, [](std::size_t) { return 12; });
  SelectionParams p;
  p.k = 5;
  p.seed = 11;
  const auto a = select_random(pool, p);
  const auto chosen = ids(a);
  EXPECT_EQ(chosen, ids(select_random(pool, p)));
  EXPECT_EQ(std::set<std::string>(chosen.begin(), chosen.end()).size(), 5u);
  p.seed = 12;
  EXPECT_NE(ids(a), ids(select_random(pool, p)));
}

TEST(Random, TooFewSurvivors) {
  const auto pool = pool_of(5, [](std::size_t i) { return i < 3 ? 12 : 2; });
  SelectionParams p;
  p.k = 4;
  EXPECT_THROW(select_random(pool, p), std::invalid_argument);
  p.k = 0;
  EXPECT_THROW(select_random(pool, p), std::invalid_argument);
}

TEST(TopK, AscendingPutsBestLast) {
  const auto pool = pool_of(6, [](std::size_t) { return 12; });
  const std::map<std::string, double> v{{"e00", 0.1}, {"e01", 0.9}, {"e02", 0.5},
                                        {"e03", 0.7}, {"e04", 0.2}, {"e05", 0.7}};
  SelectionParams p;
  p.k = 3;
  // Top three: e01 (0.9), then the 0.7 tie; ascending order breaks ties by id.
  EXPECT_EQ(ids(select_topk_by_feature(pool, v, p)), (std::vector<std::string>{"e03", "e05", "e01"}));
  p.ordering = Ordering::pool_order;
  EXPECT_EQ(ids(select_topk_by_feature(pool, v, p)), (std::vector<std::string>{"e01", "e03", "e05"}));
}

TEST(TopK, MissingValueIsAnError) {
  const auto pool = pool_of(3, [](std::size_t) { return 12; });
  SelectionParams p;
  EXPECT_THROW(select_topk_by_feature(pool, {{"e00", 1.0}}, p), std::invalid_argument);
}

TEST(TopK, FilteredExamplesNeverChosen) {
  const auto pool = pool_of(4, [](std::size_t i) { return i == 0 ? 3 : 12; });
  const std::map<std::string, double> v{{"e00", 99}, {"e01", 1}, {"e02", 2}, {"e03", 3}};
  SelectionParams p;
  p.k = 1;
  EXPECT_EQ(ids(select_topk_by_feature(pool, v, p)), (std::vector<std::string>{"e03"}));
}

TEST(CombinedStages, ProportionalScaling) {
  const CombinedParams p;
  const auto full = combined_stages(110000, p);
  EXPECT_EQ(full.sem_keep, 11000u);
  EXPECT_EQ(full.sem_drop, 1000u);
  EXPECT_EQ(full.lm_keep, 1000u);
  // 1000 examples: ceil(11000 * 1000 / 110000) = 100, ceil(1000 * 1000 / 110000) = 10.
  const auto small = combined_stages(1000, p);
  EXPECT_EQ(small.sem_keep, 100u);
  EXPECT_EQ(small.sem_drop, 10u);
  EXPECT_EQ(small.lm_keep, 10u);
}

TEST(CombinedStages, ClampOnly) {
  CombinedParams p;
  p.scaling = StageScaling::clamp_only;
  const auto s = combined_stages(5, p);
  EXPECT_EQ(s.sem_keep, 5u);
  EXPECT_EQ(s.sem_drop, 4u);
  EXPECT_EQ(s.lm_keep, 1u);
}

TEST(CombinedParams, Validation) {
  CombinedParams p;
  p.sem_drop = p.sem_keep;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.lm_keep = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Combined, HandWorkedExample) {
  const auto pool = pool_of(8, [](std::size_t) { return 12; });
  CombinedParams p;
  p.sem_keep = 6;
  p.sem_drop = 2;
  p.lm_keep = 3;
  p.scaling = StageScaling::clamp_only;
  std::map<std::string, double> sem, lm, tlen;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto id = "e0" + std::to_string(i);
    sem[id] = static_cast<double>(i);        // top 6: e07..e02; drop e07, e06 -> e05..e02
    lm[id] = static_cast<double>(i % 3);     // e05:2 e02:2 e04:1 e03:0 -> e02, e05, e04
    tlen[id] = static_cast<double>(10 - i);  // longest first: e02, e04, e05
  }
  const auto d = select_combined(pool, sem, lm, tlen, 2, p);
  EXPECT_EQ(ids(d), (std::vector<std::string>{"e02", "e04"}));
  EXPECT_THROW(select_combined(pool, sem, lm, tlen, 4, p), std::invalid_argument);
}

TEST(Demonstration, JsonlRoundTripAndHash) {
  const Demonstration d{{testing::example("a", "Ja", "Yes"), testing::example("b", "Nein", "No")}, kDeEn};
  std::stringstream ss;
  write_demonstration_jsonl(ss, d);
  const auto back = read_demonstration_jsonl(ss);
  EXPECT_EQ(ids(back), ids(d));
  EXPECT_EQ(back.examples[1].target_text, "No");
  EXPECT_EQ(demonstration_hash(back), demonstration_hash(d));
  const Demonstration swapped{{d.examples[1], d.examples[0]}, kDeEn};
  EXPECT_NE(demonstration_hash(swapped), demonstration_hash(d));
  EXPECT_EQ(demonstration_hash(d).size(), 64u);
}

TEST(Ordering, Parse) {
  EXPECT_EQ(parse_ordering("pool_order"), Ordering::pool_order);
  EXPECT_THROW(parse_ordering("random"), std::invalid_argument);
}

}  // namespace
}  // namespace mtprompt
