#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dexdedup/features.hpp"

namespace dexdedup {

// Weka-like defaults: 100 trees, unlimited depth, ceil(sqrt(F)) features per
// split, bootstrap resampling.
struct ForestConfig {
  std::size_t tree_count = 100;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(F))
  std::uint64_t seed = 0;
  bool bootstrap = true;
  unsigned jobs = 1;                   // 0 = hardware threads; never changes results

  bool operator==(const ForestConfig&) const = default;
};

// Throws InvalidConfig unless tree_count >= 1 and features_per_split <= F.
void validate_forest_config(const ForestConfig& config, std::size_t feature_count);
std::size_t effective_features_per_split(const ForestConfig& config, std::size_t feature_count);

class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for leaves
    Label label = Label::kMalware;
    std::uint32_t child[2] = {0, 0};  // by feature bit
  };

  // Greedy information-gain tree over `rows` of `matrix` (repeats allowed).
  // At each node a seeded random subset of `features_per_split` columns is
  // scored; if none of them has positive gain the remaining columns are tried
  // in the same random order until one does. Ties go to the lowest column.
  // Growth stops at pure nodes, at `max_depth` (0 = unlimited) or when no
  // column has positive gain; leaves predict the majority, ties to malware.
  static DecisionTree train(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                            std::size_t features_per_split, std::size_t max_depth, std::uint64_t seed);

  Label predict(std::span<const std::uint8_t> bits) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
};

class RandomForest {
 public:
  // Throws DegenerateLabels unless both classes are present.
  static RandomForest train(const FeatureMatrix& matrix, const ForestConfig& config);

  // Majority vote; ties go to malware.
  Label predict(std::span<const std::uint8_t> bits) const;
  std::size_t malware_votes(std::span<const std::uint8_t> bits) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
};

}  // namespace dexdedup
