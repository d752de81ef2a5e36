// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace oncoalign {

using Vector = std::vector<double>;

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderUnavailable : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class DimensionMismatch : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class EmptyText : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

class ZeroVector : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

struct EmbeddingRequest {
  std::vector<std::string> texts;
  std::optional<std::string> model_hint;

  /// Throws EmptyText for an empty list or an empty text.
  void validate() const;
};

struct EmbeddingResponse {
  std::vector<Vector> vectors;
  std::string provider_id;
};

/// One vector per text, shared dimension, finite entries; else DimensionMismatch.
void check_response(const EmbeddingResponse& response, std::size_t expected_count);

/// Implementations must tolerate concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingResponse embed(const EmbeddingRequest& request) = 0;
  virtual std::string id() const = 0;

  Vector embed_one(const std::string& text);
};

/// Bag of hashed lowercase alphanumeric tokens (FNV-1a mod dim), L2-normalised.
/// Deterministic and order-free; not semantically meaningful.
class OfflineEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDimension = 256;

  explicit OfflineEmbeddingProvider(std::size_t dimension = kDefaultDimension);

  EmbeddingResponse embed(const EmbeddingRequest& request) override;
  std::string id() const override;

  Vector embed_text(std::string_view text) const;
  /// Bucket that `token` (already normalised) hashes into.
  std::size_t bucket(std::string_view token) const;
  std::size_t dimension() const { return dim_; }

 private:
  std::size_t dim_;
};

struct RemoteEmbeddingConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080 or http://host/prefix
  int timeout_ms = 10000;
  int max_retries = 3;
  int backoff_ms = 200;  // doubled on each retry
  std::size_t batch_size = 128;
  std::size_t max_in_flight = 4;
  std::optional<std::string> model_hint;

  /// base_url from ONCOALIGN_EMBED_URL; timeout and retries from
  /// ONCOALIGN_EMBED_TIMEOUT_MS and ONCOALIGN_EMBED_MAX_RETRIES when set.
  static std::optional<RemoteEmbeddingConfig> from_env();
};

/// POST {base_url}/embed {"texts": [...]} -> {"vectors": [[...], ...]}.
/// Requests are chunked to batch_size and at most max_in_flight are open at
/// once across all callers.
class RemoteEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);
  ~RemoteEmbeddingProvider() override;

  EmbeddingResponse embed(const EmbeddingRequest& request) override;
  std::string id() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Per-run cache keyed by text.
class MemoizingProvider : public EmbeddingProvider {
 public:
  explicit MemoizingProvider(EmbeddingProvider& inner) : inner_(inner) {}

  EmbeddingResponse embed(const EmbeddingRequest& request) override;
  std::string id() const override { return inner_.id(); }
  std::size_t cache_size() const;

 private:
  EmbeddingProvider& inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Vector> cache_;
};

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> u);

/// u.v / (|u||v|) clamped to [-1, 1]. Throws DimensionMismatch or ZeroVector.
double cosine(std::span<const double> u, std::span<const double> v);

}  // namespace oncoalign
