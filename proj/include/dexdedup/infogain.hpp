#pragma once

#include <span>
#include <string>
#include <vector>

#include "dexdedup/features.hpp"

namespace dexdedup {

struct InfoGainEntry {
  std::string feature;
  std::size_t column = 0;  // index into FeatureMatrix::columns
  double gain = 0.0;       // bits

  bool operator==(const InfoGainEntry&) const = default;
};

struct InfoGainReport {
  double label_entropy = 0.0;
  std::vector<InfoGainEntry> entries;  // gain descending, ties by column
  std::vector<std::string> warnings;
};

// Shannon entropy in bits of a two-class count.
double binary_entropy(std::size_t positives, std::size_t negatives);

// Gain of one binary feature over a subset of rows. `rows` indexes `matrix`.
double feature_gain(const FeatureMatrix& matrix, std::span<const std::size_t> rows, std::size_t column);

// Throws DegenerateLabels with fewer than two rows. A single-class matrix
// yields all-zero gains and a warning instead.
InfoGainReport information_gain(const FeatureMatrix& matrix);

// "rank,feature,gain" with gains printed to 6 decimals.
std::string info_gain_csv(const InfoGainReport& report);

}  // namespace dexdedup
