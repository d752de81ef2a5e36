// SPDX-License-Identifier: Apache-2.0

#include "oncoalign/coldstart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "oncoalign/jsonl.hpp"
#include "oncoalign/random.hpp"

namespace oncoalign {

void EmbeddedCorpus::validate() const {
  if (ids.size() != vectors.size()) throw CorpusError("ids and vectors differ in length");
  if (ids.empty()) return;
  const std::size_t d = dimension();
  if (d == 0) throw CorpusError("zero-dimensional embeddings");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) throw CorpusError("duplicate id " + ids[i]);
    if (vectors[i].size() != d) throw CorpusError("embedding " + ids[i] + " has dimension " +
                                                  std::to_string(vectors[i].size()) + ", expected " +
                                                  std::to_string(d));
    for (double x : vectors[i]) {
      if (!std::isfinite(x)) throw CorpusError("embedding " + ids[i] + " has a non-finite entry");
    }
  }
}

EmbeddedCorpus EmbeddedCorpus::load_jsonl(const std::filesystem::path& path) {
  EmbeddedCorpus c;
  for (const auto& row : read_jsonl(path)) {
    if (!row.is_object() || !row.contains("id") || !row.contains("vector")) {
      throw CorpusError(path.string() + ": rows need \"id\" and \"vector\"");
    }
    const auto& id = row["id"];
    c.ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
    try {
      c.vectors.push_back(row["vector"].get<Vector>());
    } catch (const nlohmann::json::exception&) {
      throw CorpusError(path.string() + ": vector for " + c.ids.back() + " is not numeric");
    }
  }
  c.validate();
  return c;
}

EmbeddedCorpus unit_normalized(const EmbeddedCorpus& corpus) {
  EmbeddedCorpus out = corpus;
  for (auto& v : out.vectors) {
    const double n = l2_norm(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

std::vector<Vector> seed_plus_plus(const EmbeddedCorpus& c, std::size_t k, Rng& rng) {
  const std::size_t n = c.size();
  std::vector<Vector> centroids;
  centroids.reserve(k);
  centroids.push_back(c.vectors[uniform_index(rng, n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(c.vectors[i], centroids[0]);
  while (centroids.size() < k) {
    // All remaining mass zero means duplicates only; sample_weighted returns 0.
    const std::size_t pick = sample_weighted(rng, d2);
    centroids.push_back(c.vectors[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(c.vectors[i], centroids.back()));
  }
  return centroids;
}

// Nearest centroid, lowest index on ties. Returns total inertia.
double assign(const EmbeddedCorpus& c, const std::vector<Vector>& centroids, std::vector<std::size_t>& out,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const double d = squared_distance(c.vectors[i], centroids[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out[i] = best;
    dist[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

// Moves the farthest point into each empty cluster. Returns true if anything moved.
bool reseed_empty(const EmbeddedCorpus& c, std::vector<Vector>& centroids, std::vector<std::size_t>& assignment,
                  std::vector<double>& dist) {
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (auto a : assignment) ++counts[a];
  bool moved = false;
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    if (counts[j] > 0) continue;
    std::size_t far = c.size();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (counts[assignment[i]] < 2) continue;  // do not empty another cluster
      if (far == c.size() || dist[i] > dist[far]) far = i;
    }
    if (far == c.size()) break;
    --counts[assignment[far]];
    ++counts[j];
    centroids[j] = c.vectors[far];
    assignment[far] = j;
    dist[far] = 0.0;
    moved = true;
  }
  return moved;
}

void update_centroids(const EmbeddedCorpus& c, const std::vector<std::size_t>& assignment,
                      std::vector<Vector>& centroids) {
  const std::size_t d = c.dimension();
  std::vector<Vector> sums(centroids.size(), Vector(d, 0.0));
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto& s = sums[assignment[i]];
    for (std::size_t t = 0; t < d; ++t) s[t] += c.vectors[i][t];
    ++counts[assignment[i]];
  }
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    if (counts[j] == 0) continue;
    for (std::size_t t = 0; t < d; ++t) centroids[j][t] = sums[j][t] / static_cast<double>(counts[j]);
  }
}

double total(const std::vector<double>& dist) {
  double s = 0.0;
  for (double x : dist) s += x;
  return s;
}

}  // namespace

ClusterResult kmeans(const EmbeddedCorpus& corpus, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  corpus.validate();
  if (k < 1 || k > corpus.size()) {
    throw InvalidK("K = " + std::to_string(k) + " outside [1, " + std::to_string(corpus.size()) + "]");
  }
  Rng rng(seed);
  ClusterResult r;
  r.centroids = seed_plus_plus(corpus, k, rng);
  r.assignments.assign(corpus.size(), 0);
  std::vector<double> dist(corpus.size());

  assign(corpus, r.centroids, r.assignments, dist);
  reseed_empty(corpus, r.centroids, r.assignments, dist);
  r.inertia_history.push_back(total(dist));

  std::vector<std::size_t> next(corpus.size());
  while (r.iterations < max_iters) {
    ++r.iterations;
    update_centroids(corpus, r.assignments, r.centroids);
    assign(corpus, r.centroids, next, dist);
    reseed_empty(corpus, r.centroids, next, dist);
    r.inertia_history.push_back(total(dist));
    if (next == r.assignments) {
      r.converged = true;
      break;
    }
    r.assignments.swap(next);
  }
  r.inertia = r.inertia_history.back();
  return r;
}

std::vector<Exemplar> select_exemplars(const EmbeddedCorpus& corpus, const ClusterResult& clusters) {
  if (clusters.assignments.size() != corpus.size()) throw CorpusError("cluster result does not match corpus");
  const std::size_t n = corpus.size();
  std::vector<bool> taken(n, false);
  std::vector<Exemplar> out;

  for (std::size_t j = 0; j < clusters.centroids.size(); ++j) {
    std::vector<std::pair<double, std::size_t>> members;
    std::vector<std::pair<double, std::size_t>> others;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_distance(corpus.vectors[i], clusters.centroids[j]);
      (clusters.assignments[i] == j ? members : others).emplace_back(d, i);
    }
    auto order = [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return corpus.ids[a.second] < corpus.ids[b.second];
    };
    std::sort(members.begin(), members.end(), order);
    std::sort(others.begin(), others.end(), order);

    std::optional<std::pair<double, std::size_t>> pick;
    for (const auto* list : {&members, &others}) {
      for (const auto& cand : *list) {
        if (!taken[cand.second]) {
          pick = cand;
          break;
        }
      }
      if (pick) break;
    }
    if (!pick) continue;
    taken[pick->second] = true;
    out.push_back(Exemplar{corpus.ids[pick->second], pick->second, j, std::sqrt(pick->first)});
  }
  return out;
}

std::size_t default_cluster_count(std::size_t n) {
  const std::size_t quarter = (n + 3) / 4;
  return std::max<std::size_t>(1, std::min<std::size_t>(quarter, 64));
}

}  // namespace oncoalign
