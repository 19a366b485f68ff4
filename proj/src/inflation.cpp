#include "dexdedup/inflation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "dexdedup/cluster.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/parallel.hpp"
#include "dexdedup/rng.hpp"

namespace dexdedup {
namespace {

constexpr std::uint64_t kAdversarialStream = 0x414456;  // "ADV"

// group[i]: index of the exact-duplicate group of matrix row i.
double overlap(std::span<const std::size_t> group, std::span<const std::size_t> train,
               std::span<const std::size_t> test) {
  if (test.empty()) return 0.0;
  std::vector<char> seen(group.size(), 0);
  for (const std::size_t r : train) seen[group[r]] = 1;
  std::size_t hit = 0;
  for (const std::size_t r : test) hit += seen[group[r]];
  return static_cast<double>(hit) / static_cast<double>(test.size());
}

}  // namespace

InflationResult holdout_inflation_demo(std::span<const AppFingerprint> fingerprints, const FeatureMatrix& matrix,
                                       const InflationConfig& config) {
  if (!(config.train_ratio > 0.0 && config.train_ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "train ratio must be in (0, 1)");
  }
  if (config.seeds == 0 || config.max_attempts == 0) {
    throw Error(ErrorCode::kInvalidConfig, "seeds and attempts must be at least 1");
  }
  std::unordered_map<std::string, std::size_t> fp_of;
  for (std::size_t i = 0; i < fingerprints.size(); ++i) fp_of.emplace(fingerprints[i].app_id, i);

  // Fingerprints in matrix row order, so cluster ids line up with rows.
  std::vector<AppFingerprint> joined;
  joined.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) {
    const auto it = fp_of.find(row.app_id);
    if (it == fp_of.end()) throw Error(ErrorCode::kInvalidInput, "no fingerprint for feature row '" + row.app_id + "'");
    joined.push_back(fingerprints[it->second]);
  }
  const ClusterSet exact = dedup_at_zero(joined);

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) row_of.emplace(matrix.rows[i].app_id, i);
  std::vector<std::size_t> group(matrix.rows.size());
  std::vector<std::vector<std::size_t>> members(exact.clusters.size());
  std::vector<std::size_t> centroids;
  for (std::size_t g = 0; g < exact.clusters.size(); ++g) {
    for (const auto& id : exact.clusters[g].member_ids) {
      group[row_of.at(id)] = g;
      members[g].push_back(row_of.at(id));
    }
    centroids.push_back(row_of.at(exact.clusters[g].centroid_id));
  }

  InflationResult result;
  result.corpus_size = matrix.rows.size();
  result.distinct_fingerprints = exact.clusters.size();
  result.duplicate_groups = static_cast<std::size_t>(
      std::count_if(members.begin(), members.end(), [](const auto& m) { return m.size() > 1; }));
  if (result.duplicate_groups == 0) {
    throw Error(ErrorCode::kNoDuplicates, "corpus of " + std::to_string(matrix.rows.size()) +
                                              " apps has no exact duplicates; the demonstration is meaningless");
  }

  const auto test_target = static_cast<std::size_t>(
      std::llround((1.0 - config.train_ratio) * static_cast<double>(matrix.rows.size())));
  std::sort(centroids.begin(), centroids.end());
  const FeatureMatrix deduped = select_rows(matrix, centroids);

  result.runs.resize(config.seeds);
  parallel_for(config.seeds, config.jobs, [&](std::size_t s) {
    InflationRun& run = result.runs[s];
    run.seed = config.seed + s;
    ForestConfig forest = config.forest;
    forest.seed = child_seed(config.forest.seed, run.seed);
    forest.jobs = 1;

    Rng rng(child_seed(run.seed, kAdversarialStream));
    bool have = false;
    for (std::size_t attempt = 0; attempt < config.max_attempts; ++attempt) {
      std::vector<std::size_t> order(members.size());
      for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
      rng.shuffle(order);
      std::vector<char> in_test(matrix.rows.size(), 0);
      std::size_t placed = 0;
      for (const std::size_t g : order) {
        auto m = members[g];
        rng.shuffle(m);
        for (std::size_t i = 1; i < m.size() && placed < test_target; ++i, ++placed) in_test[m[i]] = 1;
      }
      for (const std::size_t g : order) {
        if (placed >= test_target) break;
        if (members[g].size() == 1) {
          in_test[members[g][0]] = 1;
          ++placed;
        }
      }
      std::vector<std::size_t> train, test;
      for (std::size_t r = 0; r < matrix.rows.size(); ++r) (in_test[r] ? test : train).push_back(r);
      if (test.empty() || train.empty()) {
        throw Error(ErrorCode::kTooFewSamples, "corpus too small for a " + std::to_string(config.train_ratio) +
                                                   " holdout split");
      }
      const auto report = holdout_evaluate(matrix, train, test, forest, config.train_ratio, run.seed);
      if (!have || report.metrics.accuracy > run.before.metrics.accuracy) {
        run.before = report;
        run.before_overlap = overlap(group, train, test);
        have = true;
      }
      run.before_attempts = attempt + 1;
      if (run.before.metrics.accuracy == 1.0) break;
    }

    const auto [train, test] = stratified_split(deduped, config.train_ratio, run.seed);
    run.after = holdout_evaluate(deduped, train, test, forest, config.train_ratio, run.seed);
    std::vector<std::size_t> dgroup(deduped.rows.size());
    for (std::size_t i = 0; i < dgroup.size(); ++i) dgroup[i] = group[centroids[i]];
    run.after_overlap = overlap(dgroup, train, test);
  });

  for (const auto& r : result.runs) {
    result.mean_before_accuracy += r.before.metrics.accuracy;
    result.mean_after_accuracy += r.after.metrics.accuracy;
  }
  result.mean_before_accuracy /= static_cast<double>(result.runs.size());
  result.mean_after_accuracy /= static_cast<double>(result.runs.size());
  return result;
}

}  // namespace dexdedup
