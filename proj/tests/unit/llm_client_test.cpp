#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mecopt/errors.hpp"
#include "mecopt/llm_client.hpp"
#include "mecopt/prompting.hpp"
#include "mecopt/scenario.hpp"

namespace mecopt {
namespace {

CompletionRequest request_for(const std::string& prompt) {
  CompletionRequest r;
  r.user_text = prompt;
  return r;
}

std::string chat_reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

TEST(Scripted, RepliesInOrderThenExhausts) {
  auto b = ScriptedBackend::from_text("one\n---\ntwo\nlines\n---\nthree");
  const auto req = request_for("x");
  EXPECT_EQ(b.complete(req), "one");
  EXPECT_EQ(b.complete(req), "two\nlines");
  EXPECT_EQ(b.complete(req), "three");
  EXPECT_EQ(b.calls(), 3u);
  try {
    b.complete(req);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::script_exhausted);
  }
}

TEST(Scripted, FromFileAndMissingFile) {
  const auto p = std::filesystem::temp_directory_path() / "mecopt_script_test.txt";
  std::ofstream(p) << "Allocation: [1, 2, 3]\n---\nAllocation: [3, 1, 2]\n";
  auto b = ScriptedBackend::from_file(p);
  EXPECT_EQ(b.complete(request_for("x")), "Allocation: [1, 2, 3]");
  std::filesystem::remove(p);
  EXPECT_THROW(ScriptedBackend::from_file(p), BackendError);
}

TEST(Heuristic, ParseableAndDeterministic) {
  const auto L = reference_matrix_imbalanced();
  ObservationBuffer buf;
  record(buf, Allocation(3, {0, 2, 2}), L);
  const auto prompt = build_prompt(L, buf, 5).text;
  HeuristicBackend a(3), b(3), c(4);
  std::vector<std::string> ra, rb, rc;
  for (int k = 0; k < 10; ++k) {
    ra.push_back(a.complete(request_for(prompt)));
    rb.push_back(b.complete(request_for(prompt)));
    rc.push_back(c.complete(request_for(prompt)));
    const auto out = parse_response(ra.back(), 3, 3, 5);
    ASSERT_EQ(out.allocations.size(), 5u) << ra.back();
    EXPECT_TRUE(out.rejected.empty());
  }
  EXPECT_EQ(ra, rb);
  EXPECT_NE(ra, rc);
}

TEST(Heuristic, UnreadablePromptIsABackendError) {
  HeuristicBackend h(1);
  try {
    h.complete(request_for("what is the capital of France?"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::prompt_unparseable);
  }
}

TEST(Retry, BackoffSchedule) {
  RetryPolicy p;
  EXPECT_EQ(p.delay_for(0).count(), 1000);
  EXPECT_EQ(p.delay_for(1).count(), 2000);
  EXPECT_EQ(p.delay_for(2).count(), 4000);
  EXPECT_EQ(p.delay_for(10).count(), 30000);
}

struct FakeTransport {
  explicit FakeTransport(std::vector<HttpResponse> s) : script(std::move(s)) {}
  std::vector<HttpResponse> script;
  std::size_t calls = 0;
  std::map<std::string, std::string> last_headers;
  std::string last_path;
  std::string last_body;
  HttpTransport fn() {
    return [this](const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& headers, double) {
      last_path = path;
      last_body = body;
      last_headers = headers;
      return script.at(std::min(calls++, script.size() - 1));
    };
  }
};

LiveConfig fake_config(std::vector<std::chrono::milliseconds>* slept) {
  LiveConfig c;
  c.endpoint = "https://example.invalid/v1";
  c.credential = "sk-test-SECRET-0123";
  c.retry.sleep = [slept](std::chrono::milliseconds d) { slept->push_back(d); };
  return c;
}

TEST(Live, SuccessSendsBearerAndModel) {
  std::vector<std::chrono::milliseconds> slept;
  FakeTransport t({{200, chat_reply("Allocation: [1, 1, 1]"), ""}});
  LiveBackend b(fake_config(&slept), t.fn());
  auto req = request_for("hello");
  req.system_text = "sys";
  EXPECT_EQ(b.complete(req), "Allocation: [1, 1, 1]");
  EXPECT_EQ(t.last_path, "/v1/chat/completions");
  EXPECT_EQ(t.last_headers.at("Authorization"), "Bearer sk-test-SECRET-0123");
  const auto body = nlohmann::json::parse(t.last_body);
  EXPECT_EQ(body.at("model"), "gpt-4o-mini");
  EXPECT_EQ(body.at("messages").size(), 2u);
  EXPECT_EQ(body.at("messages")[1].at("content"), "hello");
  EXPECT_TRUE(slept.empty());
}

TEST(Live, TransientFailuresRetriedWithBackoff) {
  std::vector<std::chrono::milliseconds> slept;
  FakeTransport t({{429, "", ""}, {503, "", ""}, {0, "", "timeout"}, {200, chat_reply("ok"), ""}});
  LiveBackend b(fake_config(&slept), t.fn());
  EXPECT_EQ(b.complete(request_for("x")), "ok");
  EXPECT_EQ(t.calls, 4u);
  ASSERT_EQ(slept.size(), 3u);
  EXPECT_EQ(slept[0].count(), 1000);
  EXPECT_EQ(slept[2].count(), 4000);
}

TEST(Live, RetriesExhaustAfterBudget) {
  std::vector<std::chrono::milliseconds> slept;
  FakeTransport t({{500, "boom sk-test-SECRET-0123", ""}});
  LiveBackend b(fake_config(&slept), t.fn());
  try {
    b.complete(request_for("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::retries_exhausted);
    EXPECT_EQ(std::string(e.what()).find("SECRET"), std::string::npos);
  }
  EXPECT_EQ(t.calls, 4u);  // 1 + 3 retries
}

TEST(Live, AuthFailureIsNotRetried) {
  std::vector<std::chrono::milliseconds> slept;
  FakeTransport t({{401, "bad key sk-test-SECRET-0123", ""}});
  LiveBackend b(fake_config(&slept), t.fn());
  try {
    b.complete(request_for("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::auth_failure);
    EXPECT_EQ(std::string(e.what()).find("SECRET"), std::string::npos);
  }
  EXPECT_EQ(t.calls, 1u);
}

TEST(Live, OtherClientErrorsAndBadBodiesAreRedacted) {
  std::vector<std::chrono::milliseconds> slept;
  FakeTransport t({{400, "echo: Bearer sk-test-SECRET-0123", ""}});
  LiveBackend b(fake_config(&slept), t.fn());
  try {
    b.complete(request_for("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::http_error);
    EXPECT_EQ(std::string(e.what()).find("SECRET"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[REDACTED]"), std::string::npos);
  }
  FakeTransport t2({{200, "{\"choices\": []}", ""}});
  LiveBackend b2(fake_config(&slept), t2.fn());
  EXPECT_THROW(b2.complete(request_for("x")), BackendError);
}

TEST(Live, ConfigurationErrors) {
  LiveConfig c;
  EXPECT_THROW(LiveBackend(c, [](auto&&...) { return HttpResponse{}; }), BackendError);
  c.credential = "k";
  c.endpoint = "ftp://nope";
  EXPECT_THROW(LiveBackend(c, [](auto&&...) { return HttpResponse{}; }), BackendError);
}

TEST(Factory, LiveNeedsTheEnvironmentVariable) {
  BackendDescriptor d;
  d.kind = BackendKind::live;
  d.endpoint = "http://127.0.0.1:9/v1";
  d.credential_env = "MECOPT_TEST_UNSET_CREDENTIAL_VAR";
  ::unsetenv(d.credential_env.c_str());
  try {
    make_backend(d);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::configuration);
    EXPECT_NE(std::string(e.what()).find("MECOPT_TEST_UNSET_CREDENTIAL_VAR"), std::string::npos);
  }
  d.kind = BackendKind::heuristic;
  d.seed = 1;
  EXPECT_NE(make_backend(d), nullptr);
}

TEST(Redact, ReplacesEveryOccurrence) {
  EXPECT_EQ(redact("a KEY b KEY", "KEY"), "a [REDACTED] b [REDACTED]");
  EXPECT_EQ(redact("nothing", ""), "nothing");
}

// Real HTTP round trip against a server bound to the loopback interface only.
class LoopbackServer {
 public:
  LoopbackServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = hits_++;
      auth_ = req.get_header_value("Authorization");
      if (req.get_header_value("Authorization") != "Bearer loopback-SECRET") {
        res.status = 401;
        return;
      }
      if (n == 0) {
        res.status = 503;
        return;
      }
      res.set_content(chat_reply("Allocation: [3, 1, 2]"), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LoopbackServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::string auth() const { return auth_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::string auth_;
};

TEST(LiveLoopback, RetriesThenSucceedsOverHttp) {
  LoopbackServer srv;
  LiveConfig c;
  c.endpoint = srv.endpoint();
  c.credential = "loopback-SECRET";
  c.retry.sleep = [](std::chrono::milliseconds) {};
  LiveBackend b(c);
  auto req = request_for("x");
  req.request_timeout_s = 5;
  EXPECT_EQ(b.complete(req), "Allocation: [3, 1, 2]");
  EXPECT_EQ(srv.hits(), 2);
  EXPECT_EQ(srv.auth(), "Bearer loopback-SECRET");
}

TEST(LiveLoopback, WrongKeyIsAuthFailure) {
  LoopbackServer srv;
  LiveConfig c;
  c.endpoint = srv.endpoint();
  c.credential = "wrong";
  c.retry.sleep = [](std::chrono::milliseconds) {};
  LiveBackend b(c);
  try {
    b.complete(request_for("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::auth_failure);
  }
  EXPECT_EQ(srv.hits(), 1);
}

TEST(LiveLoopback, ClosedPortIsRetriedThenExhausted) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  LiveConfig c;
  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  c.credential = "k";
  int sleeps = 0;
  c.retry.sleep = [&](std::chrono::milliseconds) { ++sleeps; };
  LiveBackend b(c);
  auto req = request_for("x");
  req.request_timeout_s = 0.25;
  try {
    b.complete(req);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::retries_exhausted);
  }
  EXPECT_EQ(sleeps, 3);
}

}  // namespace
}  // namespace mecopt
