// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace oncoalign {

void EmbeddingRequest::validate() const {
  if (texts.empty()) throw EmptyText("embedding request has no texts");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw EmptyText("text " + std::to_string(i) + " is empty");
  }
}

void check_response(const EmbeddingResponse& response, std::size_t expected_count) {
  if (response.vectors.size() != expected_count) {
    throw DimensionMismatch("expected " + std::to_string(expected_count) + " vectors, got " +
                            std::to_string(response.vectors.size()));
  }
  if (response.vectors.empty()) return;
  const std::size_t d = response.vectors.front().size();
  if (d == 0) throw DimensionMismatch("zero-dimensional embedding");
  for (const auto& v : response.vectors) {
    if (v.size() != d) throw DimensionMismatch("embedding dimensions differ within a batch");
    for (double x : v) {
      if (!std::isfinite(x)) throw DimensionMismatch("non-finite embedding entry");
    }
  }
}

Vector EmbeddingProvider::embed_one(const std::string& text) {
  EmbeddingRequest req{{text}, std::nullopt};
  auto resp = embed(req);
  return std::move(resp.vectors.front());
}

// ---------------------------------------------------------------------------

OfflineEmbeddingProvider::OfflineEmbeddingProvider(std::size_t dimension) : dim_(dimension) {
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string OfflineEmbeddingProvider::id() const { return "offline-hash-" + std::to_string(dim_); }

std::size_t OfflineEmbeddingProvider::bucket(std::string_view token) const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h % dim_);
}

Vector OfflineEmbeddingProvider::embed_text(std::string_view text) const {
  Vector v(dim_, 0.0);
  std::string token;
  std::size_t tokens = 0;
  auto flush = [&] {
    if (token.empty()) return;
    v[bucket(token)] += 1.0;
    ++tokens;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  if (tokens == 0) v[bucket(text)] += 1.0;  // punctuation-only text
  const double n = l2_norm(v);
  for (double& x : v) x /= n;
  return v;
}

EmbeddingResponse OfflineEmbeddingProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  EmbeddingResponse resp;
  resp.provider_id = id();
  resp.vectors.reserve(request.texts.size());
  for (const auto& t : request.texts) resp.vectors.push_back(embed_text(t));
  return resp;
}

// ---------------------------------------------------------------------------

EmbeddingResponse MemoizingProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    for (const auto& t : request.texts) {
      if (!cache_.contains(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
        missing.push_back(t);
      }
    }
  }
  if (!missing.empty()) {
    auto fetched = inner_.embed(EmbeddingRequest{missing, request.model_hint});
    check_response(fetched, missing.size());
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], std::move(fetched.vectors[i]));
  }
  EmbeddingResponse resp;
  resp.provider_id = inner_.id();
  std::lock_guard lock(mu_);
  for (const auto& t : request.texts) resp.vectors.push_back(cache_.at(t));
  check_response(resp, request.texts.size());
  return resp;
}

std::size_t MemoizingProvider::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

// ---------------------------------------------------------------------------

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionMismatch("vector dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionMismatch("vector dimensions differ");
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine of a zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace oncoalign
