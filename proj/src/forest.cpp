#include "dexdedup/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dexdedup/error.hpp"
#include "dexdedup/infogain.hpp"
#include "dexdedup/parallel.hpp"
#include "dexdedup/rng.hpp"

namespace dexdedup {
namespace {

constexpr double kMinGain = 1e-12;

Label majority(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
  std::size_t mal = 0;
  for (const std::size_t r : rows) mal += matrix.rows[r].label == Label::kMalware;
  return mal * 2 >= rows.size() ? Label::kMalware : Label::kGoodware;
}

bool pure(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
  return std::all_of(rows.begin(), rows.end(),
                     [&](std::size_t r) { return matrix.rows[r].label == matrix.rows[rows.front()].label; });
}

}  // namespace

std::size_t effective_features_per_split(const ForestConfig& config, std::size_t feature_count) {
  if (config.features_per_split != 0) return config.features_per_split;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(feature_count)))));
}

void validate_forest_config(const ForestConfig& config, std::size_t feature_count) {
  if (config.tree_count == 0) throw Error(ErrorCode::kInvalidConfig, "tree count must be at least 1");
  if (feature_count == 0) throw Error(ErrorCode::kInvalidConfig, "feature matrix has no columns");
  if (config.features_per_split > feature_count) {
    throw Error(ErrorCode::kInvalidConfig, "features per split (" + std::to_string(config.features_per_split) +
                                               ") exceeds feature count (" + std::to_string(feature_count) + ")");
  }
}

DecisionTree DecisionTree::train(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                                 std::size_t features_per_split, std::size_t max_depth, std::uint64_t seed) {
  DecisionTree tree;
  if (rows.empty()) throw Error(ErrorCode::kDegenerateLabels, "cannot grow a tree on zero rows");
  Rng rng(seed);
  std::vector<std::size_t> order(matrix.width());
  std::iota(order.begin(), order.end(), 0);

  struct Pending {
    std::uint32_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  tree.nodes_.push_back({});
  std::vector<Pending> stack;
  stack.push_back({0, {rows.begin(), rows.end()}, 0});
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    tree.nodes_[p.node].label = majority(matrix, p.rows);
    if (pure(matrix, p.rows) || (max_depth != 0 && p.depth >= max_depth)) continue;

    rng.shuffle(order);
    std::size_t best = matrix.width();
    double best_gain = kMinGain;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= features_per_split && best != matrix.width()) break;
      const std::size_t f = order[k];
      const double g = feature_gain(matrix, p.rows, f);
      if (g > best_gain || (g == best_gain && best != matrix.width() && f < best)) {
        best = f;
        best_gain = g;
      }
    }
    if (best == matrix.width()) continue;

    std::vector<std::size_t> split[2];
    for (const std::size_t r : p.rows) split[matrix.rows[r].bits[best] ? 1 : 0].push_back(r);
    tree.nodes_[p.node].feature = static_cast<std::int32_t>(best);
    for (int side = 1; side >= 0; --side) {
      const auto child = static_cast<std::uint32_t>(tree.nodes_.size());
      tree.nodes_[p.node].child[side] = child;
      tree.nodes_.push_back({});
      stack.push_back({child, std::move(split[side]), p.depth + 1});
    }
  }
  return tree;
}

Label DecisionTree::predict(std::span<const std::uint8_t> bits) const {
  std::uint32_t at = 0;
  while (nodes_[at].feature >= 0) at = nodes_[at].child[bits[static_cast<std::size_t>(nodes_[at].feature)] ? 1 : 0];
  return nodes_[at].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].child[0]] = d[i] + 1;
      d[nodes_[i].child[1]] = d[i] + 1;
    }
  }
  return deepest;
}

RandomForest RandomForest::train(const FeatureMatrix& matrix, const ForestConfig& config) {
  validate_forest_config(config, matrix.width());
  const auto mal = std::count_if(matrix.rows.begin(), matrix.rows.end(),
                                 [](const FeatureVector& r) { return r.label == Label::kMalware; });
  const auto good = std::count_if(matrix.rows.begin(), matrix.rows.end(),
                                  [](const FeatureVector& r) { return r.label == Label::kGoodware; });
  if (mal == 0 || good == 0) {
    throw Error(ErrorCode::kDegenerateLabels, "training data needs both classes (malware " + std::to_string(mal) +
                                                  ", goodware " + std::to_string(good) + ")");
  }
  const std::size_t per_split = effective_features_per_split(config, matrix.width());
  const std::size_t n = matrix.rows.size();

  RandomForest forest;
  forest.trees_.resize(config.tree_count);
  parallel_for(config.tree_count, config.jobs, [&](std::size_t t) {
    Rng rng(child_seed(config.seed, t));
    std::vector<std::size_t> sample(n);
    if (config.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    forest.trees_[t] = DecisionTree::train(matrix, sample, per_split, config.max_depth, rng.next());
  });
  return forest;
}

std::size_t RandomForest::malware_votes(std::span<const std::uint8_t> bits) const {
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += t.predict(bits) == Label::kMalware;
  return votes;
}

Label RandomForest::predict(std::span<const std::uint8_t> bits) const {
  return malware_votes(bits) * 2 >= trees_.size() ? Label::kMalware : Label::kGoodware;
}

}  // namespace dexdedup
