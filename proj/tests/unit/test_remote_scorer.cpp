#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "roomlm/errors.hpp"
#include "roomlm/remote_scorer.hpp"

using namespace roomlm;
using nlohmann::json;

namespace {

/// Splits a prompt GPT-style: every token after the first keeps its leading space.
std::vector<std::string> toy_tokens(const std::string& prompt) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : prompt) {
    if (c == ' ' && !cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
    cur += c;
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string echo_body(const std::string& prompt, bool trailing_generated = false) {
  json tokens = json::array(), lps = json::array();
  for (const auto& t : toy_tokens(prompt)) {
    tokens.push_back(t);
    lps.push_back(lps.empty() ? json(nullptr) : json(-1.0));
  }
  if (trailing_generated) {
    tokens.push_back(" extra");
    lps.push_back(-9.0);
  }
  return json{{"choices", json::array({{{"logprobs", {{"tokens", tokens}, {"token_logprobs", lps}}}}})}}.dump();
}

/// Local completion service with a handful of scripted behaviours.
struct MockService {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> flaky_calls{0}, always_calls{0}, inflight{0}, peak{0};
  std::string last_auth, last_request;
  std::mutex mu;

  MockService() {
    auto prompt_of = [this](const httplib::Request& req) {
      json body = json::parse(req.body);
      std::lock_guard lock(mu);
      last_request = req.body;
      last_auth = req.get_header_value("Authorization");
      return body.at("prompt").get<std::string>();
    };
    server.Post("/ok", [=, this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(echo_body(prompt_of(req)), "application/json");
    });
    server.Post("/generated", [=, this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(echo_body(prompt_of(req), true), "application/json");
    });
    server.Post("/flaky", [=, this](const httplib::Request& req, httplib::Response& res) {
      if (flaky_calls++ < 2) {
        res.status = 500;
        return;
      }
      res.set_content(echo_body(prompt_of(req)), "application/json");
    });
    server.Post("/busy", [=, this](const httplib::Request&, httplib::Response& res) {
      ++always_calls;
      res.status = 503;
    });
    server.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
      res.status = 400;
      res.set_content("bad request", "text/plain");
    });
    server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>oops</html>", "text/html");
    });
    server.Post("/slow", [=, this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++inflight;
      for (int p = peak; now > p && !peak.compare_exchange_weak(p, now);) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
      --inflight;
      res.set_content(echo_body(prompt_of(req)), "application/json");
    });
    server.new_task_queue = [] { return new httplib::ThreadPool(8); };
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockService() {
    server.stop();
    thread.join();
  }

  RemoteConfig config(const std::string& path) const {
    RemoteConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + path;
    c.model = "mock-lm";
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }
};

}  // namespace

TEST_CASE("request body asks for echoed prompt log probabilities") {
  json body = json::parse(build_logprob_request("m", "A room."));
  CHECK(body["model"] == "m");
  CHECK(body["prompt"] == "A room.");
  CHECK(body["echo"] == true);
  CHECK(body["max_tokens"] == 0);
  CHECK(body["logprobs"] == 0);
}

TEST_CASE("parse_logprob_response") {
  SUBCASE("null first token is kept without a term") {
    const auto toks = parse_logprob_response(echo_body("a b c"), "a b c");
    REQUIRE(toks.size() == 3);
    CHECK_FALSE(toks[0].logprob);
    CHECK(*toks[1].logprob == -1.0);
  }
  SUBCASE("generated continuation is dropped") {
    const auto toks = parse_logprob_response(echo_body("a b c", true), "a b c");
    CHECK(toks.size() == 3);
  }
  SUBCASE("tiny positive values clamp to zero") {
    const std::string body =
        R"({"choices":[{"logprobs":{"tokens":["a"," b"],"token_logprobs":[null,3e-7]}}]})";
    CHECK(*parse_logprob_response(body, "a b")[1].logprob == 0.0);
  }
  SUBCASE("malformed payloads") {
    CHECK_THROWS_AS(parse_logprob_response("not json", "x"), TransportError);
    CHECK_THROWS_AS(parse_logprob_response(R"({"choices":[]})", "x"), TransportError);
    CHECK_THROWS_AS(parse_logprob_response(
                        R"({"choices":[{"logprobs":{"tokens":["a"],"token_logprobs":[]}}]})", "x"),
                    TransportError);
    CHECK_THROWS_AS(parse_logprob_response(
                        R"({"choices":[{"logprobs":{"tokens":["a"],"token_logprobs":[0.5]}}]})", "x"),
                    TransportError);
    CHECK_THROWS_AS(parse_logprob_response(
                        R"({"choices":[{"logprobs":{"tokens":["a"],"token_logprobs":["x"]}}]})", "x"),
                    TransportError);
    try {
      parse_logprob_response("{}", "the sentence");
    } catch (const TransportError& e) {
      CHECK(e.sentence() == "the sentence");
    }
  }
}

TEST_CASE("remote scorer against a local mock service") {
  MockService svc;

  SUBCASE("successful scoring sums present terms") {
    RemoteConfig cfg = svc.config("/ok");
    cfg.api_key = "secret";
    RemoteScorer scorer(cfg);
    const SentenceScore s = scorer.score("A room containing toilet is called a bathroom.");
    CHECK(s.token_count == 7);
    CHECK(s.total_logprob == -7.0);
    CHECK(s.backend == scorer.identity());
    CHECK(scorer.identity().find("mock-lm") != std::string::npos);
    REQUIRE(s.tokens);
    CHECK(s.tokens->size() == 8);
    CHECK(svc.last_auth == "Bearer secret");
  }
  SUBCASE("trailing generated token is ignored") {
    RemoteScorer scorer(svc.config("/generated"));
    CHECK(scorer.score("a b c").total_logprob == -2.0);
  }
  SUBCASE("server errors are retried") {
    RemoteScorer scorer(svc.config("/flaky"));
    CHECK(scorer.score("a b").total_logprob == -1.0);
    CHECK(svc.flaky_calls == 3);
  }
  SUBCASE("retries are bounded") {
    RemoteConfig cfg = svc.config("/busy");
    cfg.max_attempts = 3;
    RemoteScorer scorer(cfg);
    CHECK_THROWS_AS(scorer.score("a b"), TransportError);
    CHECK(svc.always_calls == 3);
  }
  SUBCASE("client errors fail immediately") {
    RemoteScorer scorer(svc.config("/bad"));
    try {
      scorer.score("a b");
      FAIL("expected failure");
    } catch (const TransportError& e) {
      CHECK(std::string(e.what()).find("400") != std::string::npos);
      CHECK(e.sentence() == "a b");
    }
  }
  SUBCASE("non-JSON body") {
    RemoteScorer scorer(svc.config("/garbage"));
    CHECK_THROWS_AS(scorer.score("a b"), TransportError);
  }
  SUBCASE("in-flight requests respect the cap") {
    RemoteConfig cfg = svc.config("/slow");
    cfg.max_inflight = 2;
    RemoteScorer scorer(cfg);
    std::vector<std::string> sentences;
    for (int i = 0; i < 10; ++i) sentences.push_back("s " + std::to_string(i));
    const auto r = score_batch(scorer, sentences, 8);
    for (const auto& e : r) CHECK(e.ok());
    CHECK(svc.peak <= 2);
    CHECK(svc.peak >= 1);
  }
}

TEST_CASE("unreachable service is a transport failure") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/completions";
  cfg.max_attempts = 2;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(1);
  RemoteScorer scorer(cfg);
  CHECK_THROWS_AS(scorer.score("a b"), TransportError);
}

TEST_CASE("configuration errors") {
  RemoteConfig cfg;
  CHECK_THROWS_AS(RemoteScorer{cfg}, ParameterError);
  cfg.endpoint = "localhost:8000";
  CHECK_THROWS_AS(RemoteScorer{cfg}, ParameterError);
}
