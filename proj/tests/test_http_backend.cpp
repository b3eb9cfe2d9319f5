#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <mutex>
#include <thread>

#include "mtprompt/errors.hpp"
#include "mtprompt/http_backend.hpp"
#include "mtprompt/runner.hpp"
#include "test_util.hpp"

namespace mtprompt {
namespace {

using json = nlohmann::json;

/// In-process stand-in for the LLM endpoint and the scorer sidecar.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  httplib::Server& server() { return server_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendOptions options(const FakeServer& s) {
  HttpBackendOptions o;
  o.llm_url = s.url();
  o.scorer_url = s.url();
  o.max_retries = 2;
  o.backoff_base = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

TEST(Http, GenerateWireFormat) {
  FakeServer s;
  json seen;
  std::string auth;
  s.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    reply(res, {{"text", "Hello there\nGerman: more"}, {"tokens", 5}});
  });
  auto o = options(s);
  o.api_key = "sekret";
  HttpBackend b(o);
  GenerationRequest r;
  r.prompt = "German: Hallo English: ";
  r.stop_sequences = {"\n", "German:"};
  const auto out = b.generate(r);
  EXPECT_EQ(out.text, "Hello there");
  EXPECT_EQ(out.tokens_generated, 5u);
  EXPECT_GE(out.wall_time_s, 0.0);
  EXPECT_EQ(seen["prompt"], r.prompt);
  EXPECT_EQ(seen["beam_size"], 2);
  EXPECT_EQ(seen["max_new_tokens"], 256);
  EXPECT_EQ(seen["stop"], json::array({"\n", "German:"}));
  EXPECT_EQ(auth, "Bearer sekret");
}

TEST(Http, ScoreWireFormat) {
  FakeServer s;
  s.server().Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    EXPECT_EQ(json::parse(req.body)["text_to_score"], "a b");
    reply(res, {{"logprob", -3.25}, {"tokens", 2}});
  });
  HttpBackend b(options(s));
  EXPECT_EQ(b.score_loglikelihood("a b"), (ScoreResult{-3.25, 2}));
}

TEST(Http, ScoreZeroTokensIsProtocolError) {
  FakeServer s;
  s.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"logprob", 0.0}, {"tokens", 0}});
  });
  HttpBackend b(options(s));
  EXPECT_THROW(b.score_loglikelihood("a"), ProtocolError);
}

TEST(Http, ContextOverflowOn413) {
  FakeServer s;
  std::atomic<int> calls{0};
  s.server().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "too long"}}, 413);
  });
  HttpBackend b(options(s));
  EXPECT_THROW(b.score_loglikelihood("long"), ContextOverflowError);
  EXPECT_EQ(calls, 1);
}

TEST(Http, RetriesServerErrorsThenSucceeds) {
  FakeServer s;
  std::atomic<int> calls{0};
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      reply(res, {{"error", "busy"}}, calls == 1 ? 503 : 429);
      return;
    }
    reply(res, {{"text", "ok"}, {"tokens", 1}});
  });
  HttpBackend b(options(s));
  GenerationRequest r;
  r.prompt = "p";
  EXPECT_EQ(b.generate(r).text, "ok");
  EXPECT_EQ(calls, 3);
}

TEST(Http, GivesUpAfterRetries) {
  FakeServer s;
  std::atomic<int> calls{0};
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "down"}}, 500);
  });
  HttpBackend b(options(s));
  GenerationRequest r;
  r.prompt = "p";
  try {
    b.generate(r);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(calls, 3);
}

TEST(Http, ClientErrorsAreNotRetried) {
  FakeServer s;
  std::atomic<int> calls{0};
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "bad"}}, 400);
  });
  HttpBackend b(options(s));
  GenerationRequest r;
  r.prompt = "p";
  EXPECT_THROW(b.generate(r), ProtocolError);
  EXPECT_EQ(calls, 1);
}

TEST(Http, MalformedResponses) {
  FakeServer s;
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "application/json");
  });
  s.server().Post("/qe", [&](const httplib::Request&, httplib::Response& res) { reply(res, {{"value", 1}}); });
  s.server().Post("/comet", [&](const httplib::Request&, httplib::Response& res) { reply(res, {{"score", "x"}}); });
  HttpBackend b(options(s));
  GenerationRequest r;
  r.prompt = "p";
  EXPECT_THROW(b.generate(r), ProtocolError);
  EXPECT_THROW(b.qe_score("s", "h"), ProtocolError);
  EXPECT_THROW(b.comet_score("s", "h", "r"), ProtocolError);
}

TEST(Http, ScorerEndpoints) {
  FakeServer s;
  s.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto j = json::parse(req.body);
    EXPECT_EQ(j["lang"], "de");
    reply(res, {{"vector", {0.5, 0.25, 0.25}}});
  });
  s.server().Post("/qe", [&](const httplib::Request& req, httplib::Response& res) {
    const auto j = json::parse(req.body);
    EXPECT_EQ(j["src"], "s");
    EXPECT_EQ(j["hyp"], "h");
    reply(res, {{"score", 0.81}});
  });
  s.server().Post("/comet", [&](const httplib::Request& req, httplib::Response& res) {
    const auto j = json::parse(req.body);
    EXPECT_EQ(j["ref"], "r");
    EXPECT_EQ(j["hyp"], "");
    reply(res, {{"score", 0.42}});
  });
  s.server().Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"dim", 3}, {"models", {{"embed", "labse"}}}});
  });
  HttpBackend b(options(s));
  EXPECT_EQ(b.health()["dim"], 3);
  EXPECT_EQ(b.embedding_dim(), 3u);
  EXPECT_EQ(b.embed("Hallo", LangCode("de")).values, (std::vector<double>{0.5, 0.25, 0.25}));
  EXPECT_DOUBLE_EQ(b.qe_score("s", "h"), 0.81);
  EXPECT_DOUBLE_EQ(b.comet_score("s", "", "r"), 0.42);
}

TEST(Http, EmbeddingDimensionDrift) {
  FakeServer s;
  std::atomic<int> calls{0};
  s.server().Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"vector", ++calls == 1 ? json{1.0, 0.0} : json{1.0, 0.0, 0.0}}});
  });
  HttpBackend b(options(s));
  b.embed("a", LangCode("en"));
  EXPECT_THROW(b.embed("b", LangCode("en")), ProtocolError);
}

TEST(Http, ScorerDownIsUnavailable) {
  FakeServer s;
  s.server().Post("/qe", [&](const httplib::Request&, httplib::Response& res) { reply(res, {}, 503); });
  HttpBackend b(options(s));
  EXPECT_THROW(b.qe_score("s", "h"), ScorerUnavailableError);
  HttpBackendOptions none = options(s);
  none.scorer_url.clear();
  EXPECT_THROW(HttpBackend(none).comet_score("s", "h", "r"), ScorerUnavailableError);
}

TEST(Http, UrlPathPrefixIsKept) {
  FakeServer s;
  s.server().Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"text", "prefixed"}, {"tokens", 1}});
  });
  auto o = options(s);
  o.llm_url = s.url() + "/v1/";
  HttpBackend b(o);
  GenerationRequest r;
  r.prompt = "p";
  EXPECT_EQ(b.generate(r).text, "prefixed");
}

TEST(Http, NoLlmUrlIsConfigError) {
  HttpBackend b(HttpBackendOptions{});
  GenerationRequest r;
  r.prompt = "p";
  EXPECT_THROW(b.generate(r), ConfigError);
}

TEST(Http, ConcurrencyIsBounded) {
  FakeServer s;
  std::atomic<int> active{0}, peak{0};
  s.server().new_task_queue = [] { return new httplib::ThreadPool(16); };
  s.server().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int p = peak;
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --active;
    reply(res, {{"text", "x"}, {"tokens", 1}});
  });
  auto o = options(s);
  o.max_in_flight = 2;
  HttpBackend b(o);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      GenerationRequest r;
      r.prompt = "p";
      b.generate(r);
    });
  }
  threads.clear();
  EXPECT_LE(peak.load(), 2);
}

TEST(Http, RunMetaRecordsScorerModels) {
  FakeServer s;
  s.server().Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"dim", 4}, {"models", {{"comet", "wmt20-comet-da"}}}});
  });
  ExperimentConfig cfg;
  cfg.backend.kind = "http";
  cfg.backend.url = s.url();
  cfg.backend.scorer_url = s.url();
  testing::TempDir dir("meta");
  write_run_meta(dir.path(), make_backend(cfg));
  const auto meta = json::parse(testing::read_file(dir / "run_meta.json"));
  EXPECT_EQ(meta["scorer"]["models"]["comet"], "wmt20-comet-da");
  EXPECT_EQ(meta["scorer"]["dim"], 4);

  cfg.backend.scorer_url.clear();
  write_run_meta(dir.path(), make_backend(cfg));
  EXPECT_FALSE(json::parse(testing::read_file(dir / "run_meta.json")).contains("scorer"));
}

}  // namespace
}  // namespace mtprompt
