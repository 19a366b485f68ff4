#include "dexdedup/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dexdedup/error.hpp"
#include "dexdedup/parallel.hpp"
#include "dexdedup/rng.hpp"

namespace dexdedup {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::size_t> rows_with(const FeatureMatrix& matrix, Label label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    if (matrix.rows[i].label == label) out.push_back(i);
  }
  return out;
}

// Streams for seeds derived from one user seed.
constexpr std::uint64_t kFoldStream = 0x464F4C44;  // "FOLD"
constexpr std::uint64_t kSplitStream = 0x53504C54;

}  // namespace

Metrics compute_metrics(const Confusion& c) {
  Metrics m;
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  // 2PR/(P+R) written over counts, which keeps it exact when the rates are.
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

void record(Confusion& c, Label truth, Label predicted) {
  const bool pos = truth == Label::kMalware;
  const bool said_pos = predicted == Label::kMalware;
  if (pos && said_pos) ++c.tp;
  else if (pos) ++c.fn;
  else if (said_pos) ++c.fp;
  else ++c.tn;
}

std::string protocol_name(Protocol p) { return p == Protocol::kKFold ? "kfold" : "holdout"; }

std::vector<std::vector<std::size_t>> stratified_folds(const FeatureMatrix& matrix, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kTooFewSamples, "k-fold needs k >= 2");
  Rng rng(child_seed(seed, kFoldStream));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t dealer = 0;
  for (const Label label : {Label::kMalware, Label::kGoodware}) {
    auto rows = rows_with(matrix, label);
    if (rows.size() < k) {
      throw Error(ErrorCode::kTooFewSamples, std::string(label_name(label)) + " has " + std::to_string(rows.size()) +
                                                 " rows, fewer than k=" + std::to_string(k));
    }
    rng.shuffle(rows);
    for (const std::size_t r : rows) folds[dealer++ % k].push_back(r);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FeatureMatrix select_rows(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
  FeatureMatrix out{matrix.columns, {}};
  out.rows.reserve(rows.size());
  for (const std::size_t r : rows) out.rows.push_back(matrix.rows[r]);
  return out;
}

EvalReport kfold_evaluate(const FeatureMatrix& matrix, std::size_t k, const ForestConfig& forest,
                          std::uint64_t seed, unsigned jobs) {
  validate_forest_config(forest, matrix.width());
  const auto folds = stratified_folds(matrix, k, seed);
  std::vector<Confusion> per_fold(k);
  parallel_for(k, jobs, [&](std::size_t f) {
    std::vector<char> in_test(matrix.rows.size(), 0);
    for (const std::size_t r : folds[f]) in_test[r] = 1;
    std::vector<std::size_t> train;
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      if (!in_test[r]) train.push_back(r);
    }
    ForestConfig cfg = forest;
    cfg.seed = child_seed(forest.seed, f);
    cfg.jobs = 1;
    const auto model = RandomForest::train(select_rows(matrix, train), cfg);
    for (const std::size_t r : folds[f]) record(per_fold[f], matrix.rows[r].label, model.predict(matrix.rows[r].bits));
  });

  EvalReport report;
  report.protocol = Protocol::kKFold;
  report.folds = k;
  report.seed = seed;
  for (const auto& c : per_fold) report.confusion += c;
  report.metrics = compute_metrics(report.confusion);
  return report;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const FeatureMatrix& matrix,
                                                                               double train_ratio,
                                                                               std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "train ratio must be in (0, 1)");
  }
  Rng rng(child_seed(seed, kSplitStream));
  std::vector<char> in_train(matrix.rows.size(), 0);
  for (const Label label : {Label::kMalware, Label::kGoodware}) {
    auto rows = rows_with(matrix, label);
    rng.shuffle(rows);
    const auto take = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(rows.size())));
    for (std::size_t i = 0; i < take && i < rows.size(); ++i) in_train[rows[i]] = 1;
  }
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) (in_train[r] ? out.first : out.second).push_back(r);
  if (out.first.empty() || out.second.empty()) {
    throw Error(ErrorCode::kTooFewSamples, "split of " + std::to_string(matrix.rows.size()) +
                                               " rows leaves an empty train or test side");
  }
  return out;
}

EvalReport holdout_evaluate(const FeatureMatrix& matrix, std::span<const std::size_t> train,
                            std::span<const std::size_t> test, const ForestConfig& forest, double train_ratio,
                            std::uint64_t seed) {
  const auto model = RandomForest::train(select_rows(matrix, train), forest);
  EvalReport report;
  report.protocol = Protocol::kHoldout;
  report.train_ratio = train_ratio;
  report.seed = seed;
  report.train_size = train.size();
  report.test_size = test.size();
  for (const std::size_t r : test) record(report.confusion, matrix.rows[r].label, model.predict(matrix.rows[r].bits));
  report.metrics = compute_metrics(report.confusion);
  return report;
}

FeatureMatrix balance_dataset(const FeatureMatrix& matrix, std::uint64_t seed) {
  auto mal = rows_with(matrix, Label::kMalware);
  auto good = rows_with(matrix, Label::kGoodware);
  if (mal.empty() || good.empty()) {
    throw Error(ErrorCode::kDegenerateLabels, "balancing needs both classes (malware " + std::to_string(mal.size()) +
                                                  ", goodware " + std::to_string(good.size()) + ")");
  }
  auto& major = mal.size() > good.size() ? mal : good;
  const std::size_t keep = std::min(mal.size(), good.size());
  std::vector<char> drop(matrix.rows.size(), 0);
  Rng rng(seed);
  rng.shuffle(major);
  for (std::size_t i = keep; i < major.size(); ++i) drop[major[i]] = 1;

  FeatureMatrix out{matrix.columns, {}};
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    if (!drop[r]) out.rows.push_back(matrix.rows[r]);
  }
  return out;
}

}  // namespace dexdedup
