// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "oncoalign/embedding.hpp"
#include "oncoalign/text_util.hpp"
#include "oracles.hpp"

using namespace oncoalign;

namespace {

// In-process embedding service. Each text maps to [len, 1, count of 'a'].
class FakeService {
 public:
  FakeService() {
    server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      const int n = ++in_flight_;
      int seen = max_in_flight_.load();
      while (n > seen && !max_in_flight_.compare_exchange_weak(seen, n)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      --in_flight_;
      if (fail_first > 0) {
        --fail_first;
        res.status = 503;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      last_model = body.value("model", "");
      nlohmann::json vectors = nlohmann::json::array();
      for (const auto& t : body["texts"]) {
        const auto s = t.get<std::string>();
        vectors.push_back({static_cast<double>(s.size()), 1.0, static_cast<double>(std::count(s.begin(), s.end(), 'a'))});
      }
      if (drop_one && !vectors.empty()) vectors.erase(vectors.size() - 1);
      if (garbage) {
        res.set_content("not json", "text/plain");
        return;
      }
      res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  RemoteEmbeddingConfig config() const {
    RemoteEmbeddingConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    c.timeout_ms = 2000;
    c.max_retries = 2;
    c.backoff_ms = 1;
    return c;
  }

  int calls() const { return calls_; }
  int max_in_flight() const { return max_in_flight_; }

  std::atomic<int> fail_first{0};
  std::atomic<bool> drop_one{false};
  std::atomic<bool> garbage{false};
  int delay_ms = 0;
  std::string last_model;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

EmbeddingRequest request(std::vector<std::string> texts) { return EmbeddingRequest{std::move(texts), std::nullopt}; }

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("offline vectors are deterministic, order-free and unit length") {
    OfflineEmbeddingProvider p;
    CHECK(p.embed_one("rising CEA") == p.embed_one("rising CEA"));
    CHECK(p.embed_one("a b") == p.embed_one("b a"));
    gen::Rng rng(101);
    for (int i = 0; i < 500; ++i) {
      const auto text = gen::words(rng, 12, 8) + " x";
      CHECK(l2_norm(p.embed_one(text)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("offline vectors agree with a hand-built token counter") {
    OfflineEmbeddingProvider p(64);
    const std::string text = "Stage IV, stage iv; PD-L1 high";
    std::vector<double> counts(64, 0.0);
    for (const auto& tok : {"stage", "iv", "stage", "iv", "pd", "l1", "high"}) counts[p.bucket(tok)] += 1;
    double norm = 0;
    for (double c : counts) norm += c * c;
    for (double& c : counts) c /= std::sqrt(norm);
    const auto v = p.embed_one(text);
    for (std::size_t i = 0; i < 64; ++i) CHECK(v[i] == doctest::Approx(counts[i]).epsilon(1e-12));
  }

  TEST_CASE("request validation") {
    OfflineEmbeddingProvider p;
    CHECK_THROWS_AS(p.embed(request({})), EmptyText);
    CHECK_THROWS_AS(p.embed(request({"ok", ""})), EmptyText);
  }

  TEST_CASE("cosine") {
    const std::vector<double> u{1, 2, 3}, x{1, 0}, y{0, 1}, neg{-1, 0};
    CHECK(cosine(u, u) == doctest::Approx(1.0));
    CHECK(cosine(x, y) == 0.0);
    CHECK(cosine(x, neg) == -1.0);
    const std::vector<double> zero{0, 0};
    CHECK_THROWS_AS(cosine(x, zero), ZeroVector);
    CHECK_THROWS_AS(cosine(x, u), DimensionMismatch);
    gen::Rng rng(103);
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> a(5), b(5);
      for (auto& t : a) t = gen::uniform(rng, -1, 1);
      for (auto& t : b) t = gen::uniform(rng, -1, 1);
      const double c = cosine(a, b);
      CHECK(std::fabs(c - cosine(b, a)) <= 1e-12);
      CHECK(std::fabs(c - oracle::cosine(a, b)) <= 1e-12);
      auto scaled = a;
      const double alpha = gen::uniform(rng, 0.01, 100);
      for (auto& t : scaled) t *= alpha;
      CHECK(cosine(scaled, b) == doctest::Approx(c).epsilon(1e-12));
    }
  }

  TEST_CASE("response checks") {
    EmbeddingResponse r{{{1, 2}, {3}}, "x"};
    CHECK_THROWS_AS(check_response(r, 2), DimensionMismatch);
    r.vectors = {{1, 2}};
    CHECK_THROWS_AS(check_response(r, 2), DimensionMismatch);
    r.vectors = {{1, NAN}};
    CHECK_THROWS_AS(check_response(r, 1), DimensionMismatch);
  }

  TEST_CASE("memoizing provider calls through once per text") {
    FakeService svc;
    RemoteEmbeddingProvider remote(svc.config());
    MemoizingProvider memo(remote);
    const auto a = memo.embed(request({"aa", "b"}));
    const auto b = memo.embed(request({"b", "aa", "aa"}));
    CHECK(svc.calls() == 1);
    CHECK(memo.cache_size() == 2);
    CHECK(b.vectors[0] == a.vectors[1]);
    CHECK(b.vectors[1] == a.vectors[0]);
  }

  TEST_CASE("remote provider chunks, orders and bounds concurrency") {
    FakeService svc;
    svc.delay_ms = 20;
    auto cfg = svc.config();
    cfg.batch_size = 3;
    cfg.max_in_flight = 2;
    cfg.model_hint = "bert-base";
    RemoteEmbeddingProvider p(cfg);
    std::vector<std::string> texts;
    for (int i = 0; i < 14; ++i) texts.push_back(std::string(static_cast<std::size_t>(i + 1), 'a'));
    const auto resp = p.embed(request(texts));
    REQUIRE(resp.vectors.size() == 14);
    for (int i = 0; i < 14; ++i) CHECK(resp.vectors[static_cast<std::size_t>(i)][0] == i + 1);
    CHECK(svc.calls() == 5);
    CHECK(svc.max_in_flight() <= 2);
    CHECK(svc.last_model == "bert-base");
  }

  TEST_CASE("remote provider retries transient failures") {
    FakeService svc;
    svc.fail_first = 2;
    RemoteEmbeddingProvider p(svc.config());
    CHECK(p.embed(request({"abc"})).vectors.size() == 1);
    CHECK(svc.calls() == 3);
  }

  TEST_CASE("remote provider gives up after the retry budget") {
    FakeService svc;
    svc.fail_first = 100;
    RemoteEmbeddingProvider p(svc.config());
    CHECK_THROWS_AS(p.embed(request({"abc"})), ProviderUnavailable);
    CHECK(svc.calls() == 3);
    svc.fail_first = 0;
    svc.garbage = true;
    CHECK_THROWS_AS(p.embed(request({"abc"})), ProviderUnavailable);
  }

  TEST_CASE("remote arity mismatch is a dimension error") {
    FakeService svc;
    svc.drop_one = true;
    RemoteEmbeddingProvider p(svc.config());
    CHECK_THROWS_AS(p.embed(request({"a", "b", "c"})), DimensionMismatch);
    CHECK(svc.calls() == 1);
  }

  TEST_CASE("unreachable or unsupported endpoints") {
    RemoteEmbeddingConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.max_retries = 1;
    cfg.backoff_ms = 1;
    cfg.timeout_ms = 500;
    RemoteEmbeddingProvider p(cfg);
    CHECK_THROWS_AS(p.embed(request({"x"})), ProviderUnavailable);
    cfg.base_url = "https://example.invalid";
    CHECK_THROWS_AS(RemoteEmbeddingProvider{cfg}, ProviderUnavailable);
  }

  TEST_CASE("concurrent callers share one provider") {
    FakeService svc;
    auto cfg = svc.config();
    cfg.max_in_flight = 3;
    RemoteEmbeddingProvider p(cfg);
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        const auto r = p.embed(request({std::string(static_cast<std::size_t>(t + 1), 'a')}));
        if (r.vectors.size() == 1 && r.vectors[0][2] == t + 1) ++ok;
      });
    }
    for (auto& th : threads) th.join();
    CHECK(ok == 8);
    CHECK(svc.max_in_flight() <= 3);
  }
}
