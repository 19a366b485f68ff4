#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "dexdedup/error.hpp"
#include "dexdedup/evaluation.hpp"
#include "dexdedup/forest.hpp"
#include "dexdedup/inflation.hpp"
#include "dexdedup/synthetic.hpp"
#include "oracles.hpp"

using namespace dexdedup;

namespace {

constexpr Label M = Label::kMalware;
constexpr Label G = Label::kGoodware;

FeatureMatrix id3_fixture() {
  return build_matrix({{"r0", M, {1, 0, 1}},
                       {"r1", M, {1, 1, 0}},
                       {"r2", M, {1, 0, 0}},
                       {"r3", G, {0, 1, 1}},
                       {"r4", G, {0, 1, 0}},
                       {"r5", G, {1, 1, 1}}},
                      {"f0", "f1", "f2"});
}

std::size_t count_label(const FeatureMatrix& m, std::span<const std::size_t> rows, Label l) {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](auto r) { return m.rows[r].label == l; }));
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("hand-computed ID3 tree") {
    const auto m = id3_fixture();
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    const auto tree = DecisionTree::train(m, rows, 3, 0, 7);
    const auto& n = tree.nodes();
    // Root: f0 and f1 tie at 0.459 bits; the lower column wins.
    const auto& root = n[0];
    REQUIRE(root.feature == 0);
    CHECK(n[root.child[0]].feature == -1);
    CHECK(n[root.child[0]].label == G);
    const auto& right = n[root.child[1]];
    REQUIRE(right.feature == 1);
    CHECK(n[right.child[0]].feature == -1);
    CHECK(n[right.child[0]].label == M);
    const auto& last = n[right.child[1]];
    REQUIRE(last.feature == 2);
    CHECK(n[last.child[0]].label == M);
    CHECK(n[last.child[1]].label == G);
    CHECK(tree.depth() == 3);
    for (const auto& r : m.rows) CHECK(tree.predict(r.bits) == r.label);
  }

  TEST_CASE("depth limit and leaf ties") {
    const auto m = id3_fixture();
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    CHECK(DecisionTree::train(m, rows, 3, 1, 0).depth() == 1);
    const auto tie = build_matrix({{"a", M, {1}}, {"b", G, {1}}}, {"x"});
    const std::vector<std::size_t> both{0, 1};
    const auto t = DecisionTree::train(tie, both, 1, 0, 0);
    CHECK(t.nodes().size() == 1);
    CHECK(t.predict(std::vector<std::uint8_t>{1}) == M);
  }

  TEST_CASE("forest memorizes the fixture and is seed-deterministic across thread counts") {
    const auto m = oracle::random_matrix(120, 10, 4);
    ForestConfig cfg;
    cfg.tree_count = 25;
    cfg.seed = 3;
    cfg.jobs = 1;
    const auto a = RandomForest::train(m, cfg);
    cfg.jobs = 4;
    const auto b = RandomForest::train(m, cfg);
    for (const auto& r : m.rows) CHECK(a.malware_votes(r.bits) == b.malware_votes(r.bits));
    ForestConfig exact;
    exact.tree_count = 1;
    exact.bootstrap = false;
    exact.features_per_split = 3;
    const auto f = RandomForest::train(id3_fixture(), exact);
    for (const auto& r : id3_fixture().rows) CHECK(f.predict(r.bits) == r.label);
  }

  TEST_CASE("configuration checks") {
    ForestConfig cfg;
    CHECK(effective_features_per_split(cfg, 77) == 9);
    CHECK(effective_features_per_split(cfg, 16) == 4);
    cfg.tree_count = 0;
    CHECK_THROWS_AS(validate_forest_config(cfg, 3), Error);
    cfg.tree_count = 1;
    cfg.features_per_split = 4;
    CHECK_THROWS_AS(validate_forest_config(cfg, 3), Error);
    const auto one = build_matrix({{"a", M, {1}}, {"b", M, {0}}}, {"x"});
    CHECK_THROWS_AS(RandomForest::train(one, ForestConfig{}), Error);
  }
}

TEST_SUITE("evaluation") {
  TEST_CASE("9/1/1/9 confusion") {
    const Confusion c{9, 1, 9, 1};
    const auto m = compute_metrics(c);
    CHECK(m.tpr == doctest::Approx(0.9));
    CHECK(m.fpr == doctest::Approx(0.1));
    CHECK(m.accuracy == doctest::Approx(0.9));
    CHECK(m.precision == doctest::Approx(0.9));
    CHECK(m.f1 == doctest::Approx(0.9));
  }

  TEST_CASE("metric identities on random confusions") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 2000; ++i) {
      const Confusion c{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
      const auto m = compute_metrics(c);
      if (c.total() == 0) continue;
      CHECK(m.accuracy == doctest::Approx(double(c.tp + c.tn) / double(c.total())));
      if (c.tp + c.fn > 0) CHECK(m.tpr == doctest::Approx(double(c.tp) / double(c.tp + c.fn)));
      if (c.fp + c.tn > 0) CHECK(m.fpr == doctest::Approx(double(c.fp) / double(c.fp + c.tn)));
      if (m.precision + m.tpr > 0) CHECK(m.f1 == doctest::Approx(2 * m.precision * m.tpr / (m.precision + m.tpr)));
      for (const double v : {m.tpr, m.fpr, m.accuracy, m.precision, m.f1}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    CHECK(compute_metrics(Confusion{}) == Metrics{});
  }

  TEST_CASE("record") {
    Confusion c;
    record(c, M, M);
    record(c, M, G);
    record(c, G, M);
    record(c, G, G);
    record(c, G, G);
    CHECK(c == Confusion{1, 1, 2, 1});
  }

  TEST_CASE("stratified folds partition rows and balance classes") {
    const auto m = oracle::random_matrix(103, 4, 8);
    const auto folds = stratified_folds(m, 10, 5);
    REQUIRE(folds.size() == 10);
    std::vector<std::size_t> all;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : folds) {
      all.insert(all.end(), f.begin(), f.end());
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      const double share = double(count_label(m, f, M)) / double(f.size());
      const double overall = double(std::count_if(m.rows.begin(), m.rows.end(), [](auto& r) { return r.label == M; })) /
                             double(m.rows.size());
      CHECK(std::abs(share - overall) < 0.2);
    }
    CHECK(hi - lo <= 1);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(m.rows.size());
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(stratified_folds(m, 10, 5) == folds);
    CHECK_THROWS_AS(stratified_folds(m, 1, 5), Error);
    CHECK_THROWS_AS(stratified_folds(m, 200, 5), Error);
  }

  TEST_CASE("k-fold pools every row once") {
    const auto m = oracle::random_matrix(60, 6, 2);
    ForestConfig cfg;
    cfg.tree_count = 10;
    const auto r = kfold_evaluate(m, 5, cfg, 9, 2);
    CHECK(r.confusion.total() == 60);
    CHECK(r.folds == 5);
    CHECK(r.metrics == compute_metrics(r.confusion));
    const auto again = kfold_evaluate(m, 5, cfg, 9, 1);
    CHECK(again.confusion == r.confusion);
  }

  TEST_CASE("holdout split and balancing") {
    const auto m = oracle::random_matrix(50, 3, 6);
    const auto [train, test] = stratified_split(m, 0.8, 1);
    CHECK(train.size() + test.size() == 50);
    std::set<std::size_t> seen(train.begin(), train.end());
    for (const auto t : test) CHECK_FALSE(seen.contains(t));
    CHECK_THROWS_AS(stratified_split(m, 1.0, 1), Error);

    const auto bal = balance_dataset(m, 4);
    const std::vector<std::size_t> idx = [&] {
      std::vector<std::size_t> v(bal.rows.size());
      std::iota(v.begin(), v.end(), 0);
      return v;
    }();
    CHECK(count_label(bal, idx, M) == count_label(bal, idx, G));
    const auto one = build_matrix({{"a", M, {1}}, {"b", M, {0}}}, {"x"});
    CHECK_THROWS_AS(balance_dataset(one, 0), Error);
  }
}

TEST_SUITE("inflation") {
  TEST_CASE("no duplicates is reported") {
    const auto m = oracle::random_matrix(20, 3, 1);
    std::vector<AppFingerprint> fps;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      fps.push_back(make_fingerprint(m.rows[i].app_id, m.rows[i].label, {i + 1}));
    }
    try {
      holdout_inflation_demo(fps, m, InflationConfig{});
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoDuplicates);
    }
  }

  TEST_CASE("small synthetic demo") {
    SyntheticConfig sc;
    sc.distinct_apps = 30;
    sc.seed = 3;
    const auto corpus = generate_synthetic_corpus(sc);
    InflationConfig cfg;
    cfg.seeds = 3;
    cfg.forest.tree_count = 20;
    const auto r = holdout_inflation_demo(corpus.fingerprints(), corpus.features(), cfg);
    CHECK(r.corpus_size == 120);
    CHECK(r.distinct_fingerprints == 30);
    REQUIRE(r.runs.size() == 3);
    for (const auto& run : r.runs) {
      CHECK(run.before_overlap == 1.0);
      CHECK(run.after_overlap == 0.0);
    }
  }
}
