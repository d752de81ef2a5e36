// SPDX-License-Identifier: Apache-2.0

#include <condition_variable>
#include <cstdlib>
#include <future>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oncoalign/embedding.hpp"

namespace oncoalign {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + "/embed"
};

Endpoint split_url(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (scheme == std::string::npos) throw ProviderUnavailable("embedding URL lacks a scheme: " + base_url);
  if (base_url.compare(0, scheme, "http") != 0) {
    throw ProviderUnavailable("only plain http embedding endpoints are supported: " + base_url);
  }
  const auto slash = base_url.find('/', scheme + 3);
  Endpoint ep;
  ep.origin = base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  ep.path = prefix + "/embed";
  return ep;
}

// Bounds open requests across all embed() callers.
class Gate {
 public:
  explicit Gate(std::size_t limit) : free_(limit == 0 ? 1 : limit) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

std::optional<int> env_int(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<RemoteEmbeddingConfig> RemoteEmbeddingConfig::from_env() {
  const char* url = std::getenv("ONCOALIGN_EMBED_URL");
  if (!url || !*url) return std::nullopt;
  RemoteEmbeddingConfig cfg;
  cfg.base_url = url;
  if (auto t = env_int("ONCOALIGN_EMBED_TIMEOUT_MS")) cfg.timeout_ms = *t;
  if (auto r = env_int("ONCOALIGN_EMBED_MAX_RETRIES")) cfg.max_retries = *r;
  return cfg;
}

struct RemoteEmbeddingProvider::Impl {
  explicit Impl(RemoteEmbeddingConfig c) : cfg(std::move(c)), endpoint(split_url(cfg.base_url)), gate(cfg.max_in_flight) {}

  // One chunk, with retries. Arity and dimension errors are not retried.
  std::vector<Vector> post_chunk(const std::vector<std::string>& texts, const std::optional<std::string>& model) {
    nlohmann::json body{{"texts", texts}};
    if (model) body["model"] = *model;
    const auto payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg.backoff_ms << (attempt - 1)));
      gate.acquire();
      httplib::Result res;
      try {
        httplib::Client client(endpoint.origin);
        const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        res = client.Post(endpoint.path, payload, "application/json");
      } catch (...) {
        gate.release();
        throw;
      }
      gate.release();

      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
        last_error = "malformed response body";
        continue;
      }
      EmbeddingResponse resp;
      try {
        resp.vectors = doc["vectors"].get<std::vector<Vector>>();
      } catch (const nlohmann::json::exception&) {
        last_error = "malformed vectors";
        continue;
      }
      check_response(resp, texts.size());
      return std::move(resp.vectors);
    }
    throw ProviderUnavailable("embedding service " + cfg.base_url + " unavailable after " +
                              std::to_string(cfg.max_retries + 1) + " attempts: " + last_error);
  }

  RemoteEmbeddingConfig cfg;
  Endpoint endpoint;
  Gate gate;
};

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  if (impl_->cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

RemoteEmbeddingProvider::~RemoteEmbeddingProvider() = default;

std::string RemoteEmbeddingProvider::id() const {
  return "remote:" + impl_->cfg.base_url + (impl_->cfg.model_hint ? "#" + *impl_->cfg.model_hint : "");
}

EmbeddingResponse RemoteEmbeddingProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  const std::size_t n = request.texts.size();
  const std::size_t chunk = impl_->cfg.batch_size;
  const auto model = request.model_hint ? request.model_hint : impl_->cfg.model_hint;

  std::vector<std::future<std::vector<Vector>>> parts;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    std::vector<std::string> texts(request.texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                   request.texts.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + chunk)));
    parts.push_back(std::async(std::launch::async, [this, &model, t = std::move(texts)] { return impl_->post_chunk(t, model); }));
  }

  EmbeddingResponse resp;
  resp.provider_id = id();
  resp.vectors.reserve(n);
  for (auto& f : parts) {
    for (auto& v : f.get()) resp.vectors.push_back(std::move(v));
  }
  check_response(resp, n);
  return resp;
}

}  // namespace oncoalign
