#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "mtprompt/cached_backend.hpp"
#include "mtprompt/errors.hpp"
#include "mtprompt/mock_backend.hpp"
#include "test_util.hpp"

namespace mtprompt {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

GenerationRequest request(std::string prompt, std::vector<std::string> stops = {}) {
  GenerationRequest r;
  r.prompt = std::move(prompt);
  r.stop_sequences = std::move(stops);
  return r;
}

TEST(TruncateAtStop, EarliestStopWins) {
  EXPECT_EQ(truncate_at_stop("Hello world\nGerman: x", {"German:", "\n"}), "Hello world");
  EXPECT_EQ(truncate_at_stop("abc", {}), "abc");
  EXPECT_EQ(truncate_at_stop("abc", {""}), "abc");
  EXPECT_EQ(truncate_at_stop("\nabc", {"\n"}), "");
}

TEST(Validate, RejectsBadRequests) {
  EXPECT_THROW(validate(request("")), std::invalid_argument);
  auto r = request("x");
  r.beam_size = 0;
  EXPECT_THROW(validate(r), std::invalid_argument);
  r.beam_size = 1;
  r.max_new_tokens = 0;
  EXPECT_THROW(validate(r), std::invalid_argument);
  EXPECT_NO_THROW(validate(request("x")));
}

TEST(DimensionGuard, PinsFirstDimension) {
  DimensionGuard g;
  EXPECT_FALSE(g.dim());
  g.check(8, "t");
  g.check(8, "t");
  EXPECT_EQ(g.dim(), 8u);
  EXPECT_THROW(g.check(9, "t"), ProtocolError);
  EXPECT_THROW(DimensionGuard().check(0, "t"), ProtocolError);
}

TEST(Mock, StrictMissThrows) {
  MockBackend m;
  EXPECT_THROW(m.generate(request("unknown")), MockMissError);
  EXPECT_THROW(m.score_loglikelihood("unknown"), MockMissError);
  EXPECT_THROW(m.qe_score("a", "b"), MockMissError);
  EXPECT_EQ(m.generate_calls(), 1u);
}

TEST(Mock, LenientMissIsEmpty) {
  MockBackend m(false);
  EXPECT_EQ(m.generate(request("unknown")).text, "");
  EXPECT_EQ(m.score_loglikelihood("a b c").token_count, 3u);
}

TEST(Mock, SuffixMatchPrefersLongestKey) {
  MockBackend m;
  m.set_prompt_match(MockBackend::PromptMatch::suffix).add_generation("B", "short").add_generation("AB", "long");
  EXPECT_EQ(m.generate(request("xxAB")).text, "long");
  EXPECT_EQ(m.generate(request("xxB")).text, "short");
  EXPECT_THROW(m.generate(request("xxC")), MockMissError);
}

TEST(Mock, StopsAndSyntheticLatency) {
  MockBackend m;
  m.add_generation("p", "one two\nGerman: three").set_seconds_per_token(0.5);
  const auto r = m.generate(request("p", {"\n"}));
  EXPECT_EQ(r.text, "one two");
  EXPECT_EQ(r.tokens_generated, 2u);
  EXPECT_DOUBLE_EQ(r.wall_time_s, 1.0);
  EXPECT_DOUBLE_EQ(r.seconds_per_token(), 0.5);
}

TEST(Mock, ContextOverflow) {
  MockBackend m;
  m.set_fixed_score({-1.0, 1}).set_max_context_bytes(4);
  EXPECT_NO_THROW(m.score_loglikelihood("abcd"));
  EXPECT_THROW(m.score_loglikelihood("abcde"), ContextOverflowError);
}

TEST(Mock, EmbeddingIsBasisVector) {
  MockBackend m;
  m.set_embedding_dim(5);
  const auto v = m.embed("hello", LangCode("en"));
  ASSERT_EQ(v.dim(), 5u);
  double sum = 0;
  for (double x : v.values) sum += x;
  EXPECT_DOUBLE_EQ(sum, 1.0);
  EXPECT_EQ(v, m.embed("hello", LangCode("en")));
}

TEST(Mock, EmbeddingDimensionDriftIsProtocolError) {
  MockBackend m;
  int calls = 0;
  m.set_embed_fn([&calls](const std::string&, const LangCode&) {
    return EmbeddingVector{std::vector<double>(++calls == 1 ? 4 : 5, 1.0)};
  });
  m.embed("a", LangCode("en"));
  EXPECT_THROW(m.embed("b", LangCode("en")), ProtocolError);
}

TEST(Mock, ScorersUnavailable) {
  MockBackend m;
  m.set_qe_constant(0.3).set_comet_echo(1.0);
  EXPECT_DOUBLE_EQ(m.qe_score("s", "h"), 0.3);
  EXPECT_DOUBLE_EQ(m.comet_score("s", "a b", "a b"), 1.0);
  m.set_qe_available(false).set_comet_available(false);
  EXPECT_THROW(m.qe_score("s", "h"), ScorerUnavailableError);
  EXPECT_THROW(m.comet_score("s", "h", "r"), ScorerUnavailableError);
}

TEST(Mock, TokenOverlapBounds) {
  EXPECT_DOUBLE_EQ(MockBackend::token_overlap("a b", "a b"), 1.0);
  EXPECT_DOUBLE_EQ(MockBackend::token_overlap("x y", "a b"), 0.0);
  const double half = MockBackend::token_overlap("a x", "a b");
  EXPECT_GT(half, 0.0);
  EXPECT_LT(half, 1.0);
}

TEST(Cache, HitAvoidsUpstream) {
  TempDir dir("cache");
  auto mock = std::make_shared<MockBackend>();
  mock->add_generation("p", "out").set_fixed_score({-2.0, 3}).set_qe_constant(0.7).set_comet_echo(1.0);
  auto cache = with_cache(mock, dir.path());
  EXPECT_EQ(cache->generate(request("p")).text, "out");
  EXPECT_EQ(cache->generate(request("p")).text, "out");
  EXPECT_EQ(cache->score_loglikelihood("t"), (ScoreResult{-2.0, 3}));
  EXPECT_EQ(cache->score_loglikelihood("t"), (ScoreResult{-2.0, 3}));
  EXPECT_DOUBLE_EQ(cache->qe_score("s", "h"), 0.7);
  EXPECT_DOUBLE_EQ(cache->qe_score("s", "h"), 0.7);
  const auto e1 = cache->embed("x", LangCode("de"));
  EXPECT_EQ(cache->embed("x", LangCode("de")), e1);
  EXPECT_EQ(mock->total_calls(), 4u);
  EXPECT_EQ(cache->stats().hits, 4u);
  EXPECT_EQ(cache->stats().misses, 4u);
}

TEST(Cache, DistinctRequestsDistinctKeys) {
  auto a = request("p");
  auto b = request("p");
  b.beam_size = 1;
  const auto ka = CachedBackend::cache_key("generate", {{"prompt", a.prompt}, {"beam", a.beam_size}});
  const auto kb = CachedBackend::cache_key("generate", {{"prompt", b.prompt}, {"beam", b.beam_size}});
  EXPECT_NE(ka, kb);
  EXPECT_NE(CachedBackend::cache_key("qe", {{"x", 1}}), CachedBackend::cache_key("comet", {{"x", 1}}));
  EXPECT_EQ(ka.size(), 64u);
}

TEST(Cache, SurvivesRestart) {
  TempDir dir("cache");
  {
    auto mock = std::make_shared<MockBackend>();
    mock->add_generation("p", "out");
    with_cache(mock, dir.path())->generate(request("p"));
  }
  auto fresh = std::make_shared<MockBackend>();
  EXPECT_EQ(with_cache(fresh, dir.path())->generate(request("p")).text, "out");
  EXPECT_EQ(fresh->total_calls(), 0u);
}

TEST(Cache, CorruptedEntryIsRecomputed) {
  TempDir dir("cache");
  auto mock = std::make_shared<MockBackend>();
  mock->add_generation("p", "out");
  auto cache = with_cache(mock, dir.path());
  cache->generate(request("p"));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      std::ofstream(e.path()) << "{not json";
      ++files;
    }
  }
  ASSERT_EQ(files, 1u);
  EXPECT_EQ(cache->generate(request("p")).text, "out");
  EXPECT_EQ(mock->generate_calls(), 2u);
  EXPECT_EQ(cache->stats().invalidated, 1u);
  EXPECT_EQ(cache->generate(request("p")).text, "out");
  EXPECT_EQ(mock->generate_calls(), 2u);
}

TEST(Cache, FailuresNotCached) {
  TempDir dir("cache");
  auto mock = std::make_shared<MockBackend>();
  auto cache = with_cache(mock, dir.path());
  EXPECT_THROW(cache->generate(request("p")), MockMissError);
  mock->add_generation("p", "now");
  EXPECT_EQ(cache->generate(request("p")).text, "now");
}

TEST(Cache, ConcurrentIdenticalRequests) {
  TempDir dir("cache");
  auto mock = std::make_shared<MockBackend>();
  mock->add_generation("p", "out");
  auto cache = with_cache(mock, dir.path());
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 20; ++j) EXPECT_EQ(cache->generate(request("p")).text, "out");
    });
  }
  threads.clear();
  EXPECT_EQ(mock->generate_calls(), 1u);
}

}  // namespace
}  // namespace mtprompt
