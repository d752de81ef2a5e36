// SPDX-License-Identifier: Apache-2.0
//
// Cold-start exemplar selection: k-means over trace embeddings, then the
// member nearest each centroid.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "oncoalign/embedding.hpp"

namespace oncoalign {

class InvalidK : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CorpusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EmbeddedCorpus {
  std::vector<std::string> ids;
  std::vector<Vector> vectors;

  std::size_t size() const { return ids.size(); }
  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }

  /// Matching lengths, unique ids, shared nonzero dimension, finite entries.
  void validate() const;

  /// JSONL rows {"id": ..., "vector": [...]}.
  static EmbeddedCorpus load_jsonl(const std::filesystem::path& path);
};

/// Copy with every nonzero vector scaled to unit length.
EmbeddedCorpus unit_normalized(const EmbeddedCorpus& corpus);

struct ClusterResult {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignments;  // by corpus index
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
  bool converged = false;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// k-means++ seeding then Lloyd iterations until the assignment is a fixpoint
/// or max_iters. Empty clusters are re-seeded from the point farthest from
/// its centroid. Deterministic for a given seed.
ClusterResult kmeans(const EmbeddedCorpus& corpus, std::size_t k, std::size_t max_iters = 100,
                     std::uint64_t seed = 42);

struct Exemplar {
  std::string id;
  std::size_t index = 0;
  std::size_t cluster = 0;
  double distance = 0.0;  // Euclidean, to the cluster centroid
};

/// For each centroid, its nearest member (ties: smallest id). A cluster whose
/// choice is already taken, or that has no members, falls back to the next
/// nearest point. Clusters with nothing left to pick are skipped.
std::vector<Exemplar> select_exemplars(const EmbeddedCorpus& corpus, const ClusterResult& clusters);

/// min(ceil(n / 4), 64), at least 1.
std::size_t default_cluster_count(std::size_t n);

}  // namespace oncoalign
