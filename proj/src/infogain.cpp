#include "dexdedup/infogain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dexdedup/error.hpp"

namespace dexdedup {

double binary_entropy(std::size_t positives, std::size_t negatives) {
  const double n = static_cast<double>(positives + negatives);
  if (positives == 0 || negatives == 0) return 0.0;
  const double p = static_cast<double>(positives) / n;
  const double q = static_cast<double>(negatives) / n;
  return -(p * std::log2(p) + q * std::log2(q));
}

double feature_gain(const FeatureMatrix& matrix, std::span<const std::size_t> rows, std::size_t column) {
  // counts[bit][is_malware]
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (const std::size_t r : rows) {
    const auto& row = matrix.rows[r];
    ++counts[row.bits[column] ? 1 : 0][row.label == Label::kMalware ? 1 : 0];
  }
  const std::size_t mal = counts[0][1] + counts[1][1];
  const std::size_t good = counts[0][0] + counts[1][0];
  const double n = static_cast<double>(rows.size());
  if (rows.empty()) return 0.0;
  double conditional = 0.0;
  for (const auto& c : counts) {
    const std::size_t size = c[0] + c[1];
    if (size == 0) continue;
    conditional += static_cast<double>(size) / n * binary_entropy(c[1], c[0]);
  }
  return std::max(0.0, binary_entropy(mal, good) - conditional);
}

InfoGainReport information_gain(const FeatureMatrix& matrix) {
  if (matrix.rows.size() < 2) {
    throw Error(ErrorCode::kDegenerateLabels, "information gain needs at least 2 rows, got " +
                                                  std::to_string(matrix.rows.size()));
  }
  std::vector<std::size_t> all(matrix.rows.size());
  std::iota(all.begin(), all.end(), 0);

  const auto mal = static_cast<std::size_t>(std::count_if(
      matrix.rows.begin(), matrix.rows.end(), [](const FeatureVector& r) { return r.label == Label::kMalware; }));
  InfoGainReport report;
  report.label_entropy = binary_entropy(mal, matrix.rows.size() - mal);
  if (mal == 0 || mal == matrix.rows.size()) {
    report.warnings.push_back("only one class present; every gain is 0");
  }
  for (std::size_t c = 0; c < matrix.width(); ++c) {
    report.entries.push_back({matrix.columns[c], c, feature_gain(matrix, all, c)});
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const InfoGainEntry& a, const InfoGainEntry& b) { return a.gain > b.gain; });
  return report;
}

std::string info_gain_csv(const InfoGainReport& report) {
  std::string out = "rank,feature,gain\n";
  char buf[64];
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", report.entries[i].gain);
    out += std::to_string(i + 1) + "," + report.entries[i].feature + "," + buf + "\n";
  }
  return out;
}

}  // namespace dexdedup
