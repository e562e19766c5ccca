#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "citeidx/http_clients.hpp"
#include "citeidx/model_io.hpp"

using namespace citeidx;
using nlohmann::json;

namespace {

struct LocalServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  HttpConfig config() const {
    HttpConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.api_key = "k";
    c.model = "m";
    c.timeout = std::chrono::seconds(5);
    c.retry.base_delay = std::chrono::milliseconds(1);
    c.retry.max_delay = std::chrono::milliseconds(2);
    return c;
  }
};

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("mock generator: table, responder, synthesizer") {
  MockGenerator g(4);
  g.add("exact prompt", "exact answer");
  g.respond_with([](std::string_view p) -> std::optional<std::string> {
    if (p == "scripted") return "from responder";
    return std::nullopt;
  });
  CHECK(generate(g, "exact prompt") == "exact answer");
  CHECK(generate(g, "scripted") == "from responder");
  auto a = generate(g, "something else entirely");
  CHECK(a == generate(g, "something else entirely"));
  CHECK(a == generate(MockGenerator(4), "something else entirely"));
  CHECK(g.calls() == 4);
  CHECK_THROWS_AS(generate(g, "   "), ClientError);
}

TEST_CASE("generate retries transient failures") {
  MockGenerator g;
  g.add("p", "ok").fail_first(2);
  int sleeps = 0;
  CHECK(generate(g, "p", [&](std::chrono::milliseconds) { ++sleeps; }) == "ok");
  CHECK(sleeps == 2);

  MockGenerator dead;
  dead.fail_first(100);
  try {
    generate(dead, "p", [](auto) {});
    FAIL("expected exhaustion");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::exhausted);
  }
  CHECK(dead.calls() == 4);
}

TEST_CASE("retry delays grow and cap") {
  RetryPolicy p;
  CHECK(p.delay_for(0).count() == 250);
  CHECK(p.delay_for(1).count() == 500);
  CHECK(p.delay_for(3).count() == 2000);
  CHECK(p.delay_for(10).count() == 8000);
}

TEST_CASE("mock scorer is additive and bounded") {
  MockScorer s(7);
  const double whole = s.score("ctx words", "alpha beta gamma");
  const double split = s.score("ctx words", "alpha") + s.score("ctx words alpha", "beta gamma");
  CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  CHECK(whole < 0);
  CHECK(whole >= -3 * 10.01);
  for (std::uint64_t st = 0; st < 200; ++st) {
    double v = MockScorer::token_logprob(st, "tok");
    CHECK(v >= -10.01);
    CHECK(v < -0.01);
  }
}

TEST_CASE("mock embedder and similarity") {
  MockEmbedder e(64);
  auto a = embed(e, "the bridge opened");
  double norm = 0;
  for (double x : a) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  CHECK(similarity(a, a) == doctest::Approx(1.0));
  CHECK(similarity(a, embed(e, "the bridge opened in 1901")) > similarity(a, embed(e, "xyz qqq")));
  std::vector<double> shorter(3, 1.0);
  CHECK_THROWS_AS(similarity(a, shorter), ClientError);
}

TEST_CASE("mock entailment: scripted and coverage") {
  MockEntailment m(0.5);
  m.set("P", "C", 0.2);
  CHECK(m.score("P", "C") == 0.2);
  CHECK_FALSE(m.entails("P", "C"));
  CHECK(m.entails("the bridge opened in 1901", "bridge opened 1901"));
  CHECK_FALSE(m.entails("mills grind grain", "bridge opened 1901"));
}

TEST_CASE("http generator retries 429 then succeeds") {
  LocalServer srv;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_model;
  srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 429;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    auto body = json::parse(req.body);
    seen_model = body["model"];
    json r = {{"choices", {{{"message", {{"content", "echo: " + body["messages"][0]["content"].get<std::string>()}}}}}}};
    res.set_content(r.dump(), "application/json");
  });
  srv.start();
  HttpGenerator g(srv.config());
  CHECK(generate(g, "hi") == "echo: hi");
  CHECK(hits == 2);
  CHECK(seen_auth == "Bearer k");
  CHECK(seen_model == "m");
}

TEST_CASE("http generator: non-retryable status") {
  LocalServer srv;
  srv.server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  srv.start();
  HttpGenerator g(srv.config());
  try {
    generate(g, "hi");
    FAIL("expected failure");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::bad_response);
  }
}

TEST_CASE("http scorer and embedder") {
  HttpConfig plain;
  try {
    HttpScorer s(plain);
    FAIL("expected capability error");
  } catch (const ClientError& e) {
    CHECK(e.kind() == ClientError::Kind::capability);
  }

  LocalServer srv;
  srv.server.Post("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
    json r = {{"choices", {{{"logprobs", {{"token_logprobs", {nullptr, -1.0, -0.5, -0.25}}, {"text_offset", {0, 4, 8, 12}}}}}}}};
    res.set_content(r.dump(), "application/json");
  });
  srv.server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
    json r = {{"data", {{{"embedding", {3.0, 4.0}}}}}};
    res.set_content(r.dump(), "application/json");
  });
  srv.start();
  auto cfg = srv.config();
  cfg.supports_logprobs = true;
  HttpScorer s(cfg);
  CHECK(s.score("abcdefgh", " xyz") == doctest::Approx(-0.75));
  HttpEmbedder e(cfg, 2);
  auto v = embed(e, "t");
  REQUIRE(v.size() == 2);
  CHECK(v[0] * v[0] + v[1] * v[1] == doctest::Approx(1.0));
  HttpEmbedder wrong(cfg, 3);
  CHECK_THROWS_AS(embed(wrong, "t"), ClientError);
}

}
