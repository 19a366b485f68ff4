#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dexdedup/evaluation.hpp"
#include "dexdedup/fingerprint.hpp"

namespace dexdedup {

struct InflationConfig {
  double train_ratio = 0.8;
  std::size_t seeds = 20;          // seeds run: seed, seed+1, ...
  std::uint64_t seed = 0;
  std::size_t max_attempts = 50;   // adversarial assignments tried per seed
  ForestConfig forest;
  unsigned jobs = 1;
};

struct InflationRun {
  std::uint64_t seed = 0;
  EvalReport before;               // duplicate-heavy split on the full corpus
  double before_overlap = 0;       // fraction of test apps with a copy in training
  std::size_t before_attempts = 0;
  EvalReport after;                // random split after exact-duplicate removal
  double after_overlap = 0;
};

struct InflationResult {
  std::size_t corpus_size = 0;
  std::size_t distinct_fingerprints = 0;
  std::size_t duplicate_groups = 0;  // distinct fingerprints occurring more than once
  std::vector<InflationRun> runs;
  double mean_before_accuracy = 0;
  double mean_after_accuracy = 0;
};

// BEFORE: the test set is filled with extra copies of duplicated apps, each
// group keeping at least one copy in training; if duplicates cannot fill it,
// the remainder comes from singletons and the overlap is reported. Up to
// `max_attempts` seeded assignments are tried until one reaches accuracy 1;
// the best is kept. AFTER: the corpus is reduced to one app per distinct
// fingerprint, split with stratified_split and re-evaluated.
//
// Every matrix row must have a fingerprint (joined on app_id). Throws
// NoDuplicates when no two fingerprints are equal, InvalidInput on a join
// miss.
InflationResult holdout_inflation_demo(std::span<const AppFingerprint> fingerprints, const FeatureMatrix& matrix,
                                       const InflationConfig& config);

}  // namespace dexdedup
