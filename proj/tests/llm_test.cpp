#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "finstat/llm/gateway.hpp"
#include "finstat/llm/remote.hpp"
#include "finstat/llm/scripted.hpp"
#include "test_util.hpp"

using namespace finstat::llm;
using namespace std::chrono_literals;

namespace {

PromptBundle user(std::string text) { return {"", {std::move(text)}, {}}; }

// Fails with `kind` for the first `failures` calls, then answers "ok".
class FlakyProvider : public Provider {
 public:
  FlakyProvider(std::size_t failures, ErrorKind kind) : failures_(failures), kind_(kind) {}
  std::string id() const override { return "flaky"; }
  ModelReply complete(const PromptBundle&, std::chrono::milliseconds) override {
    ++calls;
    if (calls <= failures_) throw LlmError(kind_, id(), "boom " + std::to_string(calls));
    return {"ok", id(), 0ms, {1, 1}};
  }
  std::size_t calls = 0;

 private:
  std::size_t failures_;
  ErrorKind kind_;
};

}  // namespace

TEST(Scripted, ReturnsTheMatchingReplyVerbatim) {
  const auto reply_text = finstat::testing::read_test_file("data/b1_example_reply.txt");
  auto provider = std::make_shared<ScriptedProvider>(
      std::vector<ScriptRule>{{ScriptRule::Match::contains, "Net Income YoY", {reply_text}, 1}});
  Gateway gateway(provider);
  const auto reply = gateway.complete(user("<question>\nNet Income YoY and ROE 4 nearest quarter of HPG in 2023\n"));
  EXPECT_EQ(reply.text, reply_text);
  EXPECT_EQ(reply.provider_id, "scripted");
}

TEST(Scripted, NoMatchIsTyped) {
  Gateway gateway(ScriptedProvider::from_text("@rule contains xyz\n@response\nhi\n@end\n"));
  try {
    gateway.complete(user("abc"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_script_match);
  }
}

TEST(Scripted, OrderedResponsesThenLastRepeats) {
  auto provider = ScriptedProvider::from_text(
      "# two answers\n"
      "@rule regex ^ask\\b\n@response\nfirst\n@response\nsecond\n@end\n");
  EXPECT_EQ(provider->complete(user("ask me"), 1s).text, "first");
  EXPECT_EQ(provider->complete(user("ask me"), 1s).text, "second");
  EXPECT_EQ(provider->complete(user("ask me"), 1s).text, "second");
  provider->reset();
  EXPECT_EQ(provider->complete(user("ask me"), 1s).text, "first");
}

TEST(Scripted, FirstMatchingRuleWins) {
  auto provider = ScriptedProvider::from_text(
      "@rule contains alpha\n@response\nA\n@end\n"
      "@rule contains alpha beta\n@response\nB\n@end\n");
  EXPECT_EQ(provider->complete(user("alpha beta"), 1s).text, "A");
}

TEST(Scripted, MatchesAcrossSystemAndUserTurns) {
  auto provider = ScriptedProvider::from_text("@rule regex SYSTEM[\\s\\S]*second\n@response\nboth\n@end\n");
  EXPECT_EQ(provider->complete({"SYSTEM", {"first", "second"}, {}}, 1s).text, "both");
}

TEST(Scripted, ParsesMultilineBodiesAndEscapes) {
  const auto rules = ScriptedProvider::parse(
      "@rule contains q\n"
      "@response\n"
      "### Decision:\n"
      "@@literal at\n"
      "\n"
      "# not a comment inside a body\n"
      "\n"
      "@end\n");
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].responses[0], "### Decision:\n@literal at\n\n# not a comment inside a body");
  EXPECT_EQ(ScriptedProvider::parse(format_script(rules))[0].responses, rules[0].responses);
}

TEST(Scripted, MalformedScriptsReportLines) {
  const auto expect_error_at = [](const char* script, const char* needle) {
    try {
      ScriptedProvider::parse(script);
      ADD_FAILURE() << "accepted: " << script;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error_at("@rule contains x\n@response\nhi\n", "missing @end");
  expect_error_at("hello\n", "line 1");
  expect_error_at("@rule fuzzy x\n@response\nA\n@end\n", "unknown matcher");
  expect_error_at("@rule regex (\n@response\nA\n@end\n", "bad regex");
  expect_error_at("@rule contains x\n@end\n", "no @response");
  expect_error_at("\n@response\nA\n", "line 2");
}

TEST(Scripted, SameScriptSamePromptsSameReplies) {
  const char* script = "@rule contains a\n@response\n1\n@response\n2\n@end\n@rule contains b\n@response\n3\n@end\n";
  const std::vector<std::string> prompts = {"a", "b", "a", "a", "b"};
  const auto run = [&] {
    auto p = ScriptedProvider::from_text(script);
    std::vector<std::string> out;
    for (const auto& q : prompts) out.push_back(p->complete(user(q), 1s).text);
    return out;
  };
  EXPECT_EQ(run(), run());
  EXPECT_EQ(run(), (std::vector<std::string>{"1", "3", "2", "2", "3"}));
}

TEST(Gateway, RetriesTransportErrorsWithBackoff) {
  auto flaky = std::make_shared<FlakyProvider>(2, ErrorKind::transport);
  std::vector<std::chrono::milliseconds> sleeps;
  Gateway gateway(flaky, {2, 100ms, 2.0, 1s}, [&](auto d) { sleeps.push_back(d); });
  CallLog log;
  EXPECT_EQ(gateway.complete(user("x"), &log, "generation").text, "ok");
  EXPECT_EQ(flaky->calls, 3u);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{100ms, 200ms}));
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.records()[0].attempts, 3u);
  EXPECT_EQ(log.records()[0].stage, "generation");
}

TEST(Gateway, ExhaustedRetriesCarryTheLastCause) {
  auto flaky = std::make_shared<FlakyProvider>(10, ErrorKind::transport);
  Gateway gateway(flaky, {2, 1ms, 2.0, 1s}, [](auto) {});
  CallLog log;
  try {
    gateway.complete(user("x"), &log);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::exhausted);
    EXPECT_NE(std::string(e.what()).find("boom 3"), std::string::npos);
  }
  EXPECT_EQ(flaky->calls, 3u);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_TRUE(log.records()[0].error.has_value());
  EXPECT_FALSE(log.records()[0].reply.has_value());
}

TEST(Gateway, TypedRejectionsAreNotRetried) {
  for (auto kind : {ErrorKind::auth, ErrorKind::rate_limited, ErrorKind::no_script_match}) {
    auto flaky = std::make_shared<FlakyProvider>(1, kind);
    Gateway gateway(flaky, {2, 1ms, 2.0, 1s}, [](auto) {});
    try {
      gateway.complete(user("x"));
      FAIL();
    } catch (const LlmError& e) {
      EXPECT_EQ(e.kind(), kind);
    }
    EXPECT_EQ(flaky->calls, 1u);
  }
}

TEST(Gateway, EmptyBundleIsRejected) {
  Gateway gateway(std::make_shared<FlakyProvider>(0, ErrorKind::transport));
  EXPECT_THROW(gateway.complete({}), LlmError);
}

TEST(Gateway, OneRecordPerCall) {
  Gateway gateway(ScriptedProvider::from_text("@rule contains a\n@response\nA\n@end\n"));
  CallLog log;
  gateway.complete(user("a"), &log, "s1");
  EXPECT_THROW(gateway.complete(user("zzz"), &log, "s2"), LlmError);
  gateway.complete(user("a"), &log, "s3");
  const auto records = log.records();
  ASSERT_EQ(records.size(), 3u);
  EXPECT_TRUE(records[0].reply.has_value());
  EXPECT_TRUE(records[1].error.has_value());
  EXPECT_EQ(records[2].stage, "s3");
}

namespace {

class FakeChatServer {
 public:
  FakeChatServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = nlohmann::json::parse(req.body);
      const auto key = req.get_header_value("Authorization");
      if (key == "Bearer limited") {
        res.status = 429;
        return;
      }
      if (key == "Bearer down") {
        res.status = 503;
        return;
      }
      if (key != "Bearer good") {
        res.status = 401;
        res.set_content(R"({"error":{"message":"invalid key"}})", "application/json");
        return;
      }
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"SELECT 1"}}],)"
                      R"("usage":{"prompt_tokens":12,"completion_tokens":3}})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeChatServer() {
    server_.stop();
    thread_.join();
  }
  RemoteProviderConfig config(const std::string& key) const {
    return {"fake", "http://127.0.0.1:" + std::to_string(port_) + "/v1", "m", key};
  }
  nlohmann::json last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Remote, SendsChatCompletionRequests) {
  FakeChatServer server;
  RemoteProvider provider(server.config("good"));
  const auto reply = provider.complete({"sys", {"u1", "u2"}, {0.0, 77}}, 5s);
  EXPECT_EQ(reply.text, "SELECT 1");
  EXPECT_EQ(reply.usage.prompt, 12u);
  EXPECT_EQ(reply.usage.completion, 3u);
  EXPECT_EQ(server.last_body.at("model"), "m");
  EXPECT_EQ(server.last_body.at("max_tokens"), 77);
  EXPECT_EQ(server.last_body.at("temperature"), 0.0);
  ASSERT_EQ(server.last_body.at("messages").size(), 3u);
  EXPECT_EQ(server.last_body.at("messages")[0].at("role"), "system");
  EXPECT_EQ(server.last_body.at("messages")[2].at("content"), "u2");
}

TEST(Remote, MapsHttpFailuresToTypedErrors) {
  FakeChatServer server;
  const auto kind_for = [&](const std::string& key) {
    try {
      RemoteProvider(server.config(key)).complete(user("x"), 5s);
    } catch (const LlmError& e) {
      return e.kind();
    }
    return ErrorKind::invalid_request;
  };
  EXPECT_EQ(kind_for("bad"), ErrorKind::auth);
  EXPECT_EQ(kind_for("limited"), ErrorKind::rate_limited);
  EXPECT_EQ(kind_for("down"), ErrorKind::transport);

  RemoteProvider unreachable({"gone", "http://127.0.0.1:1/v1", "m", ""});
  Gateway gateway(std::shared_ptr<Provider>(&unreachable, [](Provider*) {}), {2, 1ms, 2.0, 300ms}, [](auto) {});
  try {
    gateway.complete(user("x"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::exhausted);
    EXPECT_EQ(e.provider(), "gone");
  }
}

TEST(Replay, RecordedRepliesReplayByPromptHash) {
  const std::string path = ::testing::TempDir() + "finstat_replay.jsonl";
  std::remove(path.c_str());
  {
    RecordingProvider recorder(ScriptedProvider::from_text("@rule contains a\n@response\nA1\n@end\n"), path);
    recorder.complete(user("a"), 1s);
  }
  auto replay = ReplayProvider::from_file(path);
  EXPECT_EQ(replay->complete(user("a"), 1s).text, "A1");
  try {
    replay->complete(user("b"), 1s);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_script_match);
  }
  std::remove(path.c_str());
}
