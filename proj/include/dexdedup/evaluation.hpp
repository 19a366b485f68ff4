#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dexdedup/features.hpp"
#include "dexdedup/forest.hpp"

namespace dexdedup {

// Malware is the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp; fp += o.fp; tn += o.tn; fn += o.fn;
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

// A zero denominator yields 0 for that metric.
struct Metrics {
  double tpr = 0, fpr = 0, accuracy = 0, precision = 0, f1 = 0;
  bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const Confusion& c);

enum class Protocol { kKFold, kHoldout };

struct EvalReport {
  Protocol protocol = Protocol::kKFold;
  std::size_t folds = 0;    // kKFold
  double train_ratio = 0;   // kHoldout
  std::uint64_t seed = 0;
  std::size_t train_size = 0, test_size = 0;  // holdout only
  Confusion confusion;      // pooled over folds
  Metrics metrics;          // computed from `confusion`
};

void record(Confusion& c, Label truth, Label predicted);

// Test-row indices of each of `k` stratified folds: each class is shuffled
// (seeded) and dealt round-robin, continuing the dealer across classes.
// Throws TooFewSamples when k < 2 or a class has fewer than k rows.
std::vector<std::vector<std::size_t>> stratified_folds(const FeatureMatrix& matrix, std::size_t k,
                                                       std::uint64_t seed);

// Trains one forest per fold (seed derived from `forest.seed` and the fold)
// and pools the confusion matrices. Folds run in parallel on `jobs` threads.
EvalReport kfold_evaluate(const FeatureMatrix& matrix, std::size_t k, const ForestConfig& forest,
                          std::uint64_t seed, unsigned jobs = 1);

// Stratified random split: round(ratio * class size) rows of each class go to
// training, the rest to test. Both sides keep input order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const FeatureMatrix& matrix,
                                                                               double train_ratio,
                                                                               std::uint64_t seed);

FeatureMatrix select_rows(const FeatureMatrix& matrix, std::span<const std::size_t> rows);

EvalReport holdout_evaluate(const FeatureMatrix& matrix, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, const ForestConfig& forest, double train_ratio,
                            std::uint64_t seed);

// Seeded uniform down-sampling of the majority class to the minority size.
// Rows keep their original order; minority rows are untouched.
// Throws DegenerateLabels unless both classes are present.
FeatureMatrix balance_dataset(const FeatureMatrix& matrix, std::uint64_t seed);

std::string protocol_name(Protocol p);

}  // namespace dexdedup
