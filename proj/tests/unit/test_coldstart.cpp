// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "generators.hpp"
#include "oncoalign/coldstart.hpp"
#include "oracles.hpp"

using namespace oncoalign;

namespace {

EmbeddedCorpus random_corpus(gen::Rng& rng, std::size_t n, std::size_t d) {
  EmbeddedCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    c.ids.push_back("id-" + std::to_string(1000 + i));
    Vector v(d);
    for (double& x : v) x = gen::uniform(rng, -1, 1);
    c.vectors.push_back(v);
  }
  return c;
}

EmbeddedCorpus blobs(gen::Rng& rng, std::size_t per_blob, std::vector<int>& labels) {
  EmbeddedCorpus c;
  labels.clear();
  for (int b = 0; b < 2; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      c.ids.push_back("p" + std::to_string(c.ids.size()));
      c.vectors.push_back({b * 50.0 + standard_normal(rng), standard_normal(rng), standard_normal(rng)});
      labels.push_back(b);
    }
  }
  // Interleave so blob membership is not the input order.
  for (std::size_t i = c.size(); i > 1; --i) {
    const auto j = gen::index(rng, i);
    std::swap(c.ids[i - 1], c.ids[j]);
    std::swap(c.vectors[i - 1], c.vectors[j]);
    std::swap(labels[i - 1], labels[j]);
  }
  return c;
}

}  // namespace

TEST_SUITE("coldstart") {
  TEST_CASE("K = N puts every point in its own cluster") {
    gen::Rng rng(73);
    const auto c = random_corpus(rng, 9, 4);
    const auto r = kmeans(c, 9);
    CHECK(r.inertia == doctest::Approx(0.0));
    CHECK(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size() == 9);
    const auto ex = select_exemplars(c, r);
    std::set<std::string> ids;
    for (const auto& e : ex) ids.insert(e.id);
    CHECK(ids == std::set<std::string>(c.ids.begin(), c.ids.end()));
  }

  TEST_CASE("K = 1 gives the coordinate-wise mean") {
    gen::Rng rng(79);
    const auto c = random_corpus(rng, 20, 3);
    const auto r = kmeans(c, 1);
    for (std::size_t t = 0; t < 3; ++t) {
      double m = 0;
      for (const auto& v : c.vectors) m += v[t];
      CHECK(r.centroids[0][t] == doctest::Approx(m / 20).epsilon(1e-12));
    }
  }

  TEST_CASE("inertia history never increases and matches the assignment") {
    gen::Rng rng(83);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 5 + gen::index(rng, 80);
      const auto c = random_corpus(rng, n, 2 + gen::index(rng, 5));
      const auto r = kmeans(c, 1 + gen::index(rng, std::min<std::size_t>(n, 12)), 100, rng());
      for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
        CHECK(r.inertia_history[i] <= r.inertia_history[i - 1]);
      }
      double inertia = 0;
      for (std::size_t i = 0; i < n; ++i) inertia += oracle::sq_dist(c.vectors[i], r.centroids[r.assignments[i]]);
      CHECK(r.inertia == doctest::Approx(inertia).epsilon(1e-12));
    }
  }

  TEST_CASE("separated blobs are recovered") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      gen::Rng rng(seed);
      std::vector<int> labels;
      const auto c = blobs(rng, 30, labels);
      const auto r = kmeans(c, 2, 100, seed);
      const auto a0 = r.assignments[0];
      for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK((r.assignments[i] == a0) == (labels[i] == labels[0]));
      }
    }
  }

  TEST_CASE("exemplars match exhaustive search") {
    gen::Rng rng(89);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + gen::index(rng, 60);
      const auto c = random_corpus(rng, n, 3);
      const auto r = kmeans(c, 1 + gen::index(rng, n), 100, rng());
      const auto got = select_exemplars(c, r);
      const auto want = oracle::exemplars(c.vectors, c.ids, r.centroids, r.assignments);
      REQUIRE(got.size() == want.size());
      std::set<std::string> distinct;
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].index == want[i]);
        CHECK(r.assignments[got[i].index] == got[i].cluster);
        distinct.insert(got[i].id);
      }
      CHECK(distinct.size() == got.size());
    }
  }

  TEST_CASE("five points, two clusters") {
    EmbeddedCorpus c{{"a", "b", "c", "d", "e"}, {{0, 0}, {1, 0}, {0, 1}, {10, 10}, {11, 10}}};
    const auto r = kmeans(c, 2);
    const auto got = select_exemplars(c, r);
    const auto want = oracle::exemplars(c.vectors, c.ids, r.centroids, r.assignments);
    REQUIRE(got.size() == 2);
    CHECK(got[0].index == want[0]);
    CHECK(got[1].index == want[1]);
  }

  TEST_CASE("two centroids sharing a nearest point get distinct exemplars") {
    EmbeddedCorpus c{{"a", "b", "c"}, {{0, 0}, {1, 0}, {5, 0}}};
    ClusterResult r;
    r.centroids = {{0.1, 0}, {0.2, 0}};
    r.assignments = {0, 1, 1};
    const auto ex = select_exemplars(c, r);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].id == "a");
    CHECK(ex[1].id == "b");
    r.assignments = {0, 0, 0};
    const auto fallback = select_exemplars(c, r);
    REQUIRE(fallback.size() == 2);
    CHECK(fallback[0].id == "a");
    CHECK(fallback[1].id == "b");
  }

  TEST_CASE("clustering is deterministic") {
    gen::Rng rng(97);
    const auto c = random_corpus(rng, 50, 4);
    const auto a = kmeans(c, 5, 100, 42), b = kmeans(c, 5, 100, 42);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia_history == b.inertia_history);
  }

  TEST_CASE("corpus validation and K bounds") {
    EmbeddedCorpus c{{"a", "a"}, {{1.0}, {2.0}}};
    CHECK_THROWS_AS(c.validate(), CorpusError);
    c = {{"a", "b"}, {{1.0}, {2.0, 3.0}}};
    CHECK_THROWS_AS(c.validate(), CorpusError);
    c = {{"a", "b"}, {{1.0}, {2.0}}};
    CHECK_THROWS_AS(kmeans(c, 0), InvalidK);
    CHECK_THROWS_AS(kmeans(c, 3), InvalidK);
    CHECK(default_cluster_count(1) == 1);
    CHECK(default_cluster_count(10) == 3);
    CHECK(default_cluster_count(10000) == 64);
  }

  TEST_CASE("fixture embeddings load") {
    const auto c = EmbeddedCorpus::load_jsonl(gen::fixture_dir() / "pipeline" / "embeddings.jsonl");
    CHECK(c.size() == 10);
    CHECK(c.dimension() == 8);
    const auto u = unit_normalized(c);
    for (const auto& v : u.vectors) CHECK(l2_norm(v) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
