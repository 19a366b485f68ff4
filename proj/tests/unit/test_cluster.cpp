#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dexdedup/cluster.hpp"
#include "dexdedup/error.hpp"
#include "oracles.hpp"

using namespace dexdedup;

namespace {

std::vector<AppFingerprint> five_apps() {
  return {make_fingerprint("A", Label::kMalware, {1, 2, 3, 4}),
          make_fingerprint("B", Label::kMalware, {1, 2, 3, 4}),
          make_fingerprint("C", Label::kMalware, {1, 2, 3, 5}),
          make_fingerprint("D", Label::kMalware, {6, 7, 8, 9}),
          make_fingerprint("E", Label::kMalware, {2, 3, 5, 16})};
}

// Each app appears in exactly one cluster; members lie within epsilon of
// their centroid; no centroid lies within epsilon of an earlier one.
void check_partition(const std::vector<AppFingerprint>& corpus, const ClusterSet& set) {
  std::map<std::string, const AppFingerprint*> by_id;
  for (const auto& fp : corpus) by_id[fp.app_id] = &fp;
  std::multiset<std::string> seen;
  for (const auto& c : set.clusters) {
    REQUIRE(!c.member_ids.empty());
    CHECK(c.member_ids.front() == c.centroid_id);
    for (const auto& m : c.member_ids) {
      seen.insert(m);
      CHECK(oracle::ochiai(*by_id[c.centroid_id], *by_id[m]) <= set.epsilon);
    }
  }
  CHECK(seen.size() == corpus.size());
  for (const auto& fp : corpus) CHECK(seen.count(fp.app_id) == 1);
  if (!set.per_label) {
    for (std::size_t i = 0; i < set.clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < set.clusters.size(); ++j) {
        CHECK(oracle::ochiai(*by_id[set.clusters[i].centroid_id], *by_id[set.clusters[j].centroid_id]) >
              set.epsilon);
      }
    }
  }
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("five-app trace in input order") {
    const auto corpus = five_apps();
    const auto set = cluster_corpus(corpus, 0.3, 0, VisitMode::kOrdered);
    REQUIRE(set.clusters.size() == 3);
    CHECK(set.clusters[0] == Cluster{"A", {"A", "B", "C"}});
    // E is 0.25 from C, but C is not a centroid: no chaining.
    CHECK(set.clusters[1] == Cluster{"D", {"D"}});
    CHECK(set.clusters[2] == Cluster{"E", {"E"}});
    check_partition(corpus, set);
  }

  TEST_CASE("partition laws hold on random corpora") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto corpus = oracle::random_corpus(80, seed);
      for (const double eps : {0.0, 0.1, 0.35, 0.7, 1.0}) {
        for (const auto mode : {VisitMode::kRandom, VisitMode::kOrdered}) {
          check_partition(corpus, cluster_corpus(corpus, eps, seed, mode));
        }
      }
    }
  }

  TEST_CASE("epsilon extremes") {
    const auto corpus = oracle::random_corpus(100, 9);
    CHECK(cluster_corpus(corpus, 0.0, 3).clusters.size() == oracle::distinct_sets(corpus));
    CHECK(dedup_at_zero(corpus).clusters.size() == oracle::distinct_sets(corpus));
    CHECK(cluster_corpus(corpus, 1.0, 3).clusters.size() == 1);
  }

  TEST_CASE("same seed, same clusters") {
    const auto corpus = oracle::random_corpus(60, 4);
    CHECK(cluster_corpus(corpus, 0.4, 11) == cluster_corpus(corpus, 0.4, 11));
  }

  TEST_CASE("per-label clusters never mix labels") {
    auto corpus = oracle::random_corpus(60, 2);
    std::map<std::string, Label> label;
    for (auto& fp : corpus) label[fp.app_id] = fp.label;
    const auto set = cluster_per_label(corpus, 1.0, 5);
    CHECK(set.clusters.size() == 2);
    for (const auto& c : set.clusters) {
      for (const auto& m : c.member_ids) CHECK(label[m] == label[c.centroid_id]);
    }
  }

  TEST_CASE("dedup_at_zero groups exact copies in input order") {
    const auto corpus = five_apps();
    const auto set = dedup_at_zero(corpus);
    REQUIRE(set.clusters.size() == 4);
    CHECK(set.clusters[0] == Cluster{"A", {"A", "B"}});
  }

  TEST_CASE("filter keeps centroids") {
    const auto corpus = five_apps();
    const auto set = cluster_corpus(corpus, 0.3, 0, VisitMode::kOrdered);
    const auto reps = filter_representatives(corpus, set);
    REQUIRE(reps.size() == 3);
    CHECK(reps[0].app_id == "A");
    auto bad = set;
    bad.clusters[0].member_ids.push_back("Z");
    CHECK_THROWS_AS(filter_representatives(corpus, bad), Error);
  }

  TEST_CASE("input errors") {
    CHECK_THROWS_AS(cluster_corpus({}, 0.1, 0), Error);
    const auto corpus = five_apps();
    CHECK_THROWS_AS(cluster_corpus(corpus, 1.5, 0), Error);
    CHECK_THROWS_AS(cluster_corpus(corpus, -0.1, 0), Error);
  }

  TEST_CASE("epsilon grids") {
    const auto g = parse_epsilon_grid("0:1:0.1");
    REQUIRE(g.size() == 11);
    CHECK(g[3] == 0.3);
    CHECK(g.back() == 1.0);
    CHECK(parse_epsilon_grid("0.05,0.5") == std::vector<double>{0.05, 0.5});
    CHECK_THROWS_AS(parse_epsilon_grid("0:2:0.5"), Error);
    CHECK_THROWS_AS(parse_epsilon_grid("0:1"), Error);
    CHECK_THROWS_AS(parse_epsilon_grid("a,b"), Error);
  }

  TEST_CASE("sweep counts match direct clustering") {
    const auto corpus = oracle::random_corpus(90, 12);
    const std::vector<double> grid{0.0, 0.2, 0.5, 1.0};
    const auto sweep = epsilon_sweep(corpus, grid, 8);
    REQUIRE(sweep.size() == 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(sweep[i].cluster_count == cluster_corpus(corpus, grid[i], 8).clusters.size());
    }
  }
}
