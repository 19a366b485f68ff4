#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dexdedup/fingerprint.hpp"

namespace dexdedup {

struct Cluster {
  std::string centroid_id;
  std::vector<std::string> member_ids;  // centroid first, then input order

  bool operator==(const Cluster&) const = default;
};

enum class VisitMode {
  kRandom,   // next centroid drawn uniformly from the unvisited apps (seeded)
  kOrdered,  // next centroid is the first unvisited app in input order
};

struct ClusterSet {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  VisitMode mode = VisitMode::kRandom;
  bool per_label = false;
  std::vector<Cluster> clusters;

  bool operator==(const ClusterSet&) const = default;
};

// Leader clustering. Until every app is clustered: pick an unvisited app
// (per `mode`), make it a centroid, and attach every still-unclustered app
// within `epsilon` of it. Clustered apps are never revisited or reassigned.
// Throws EmptyCorpus, InvalidConfig (epsilon outside [0, 1]),
// EmptyFingerprint, DuplicateAppId.
ClusterSet cluster_corpus(std::span<const AppFingerprint> corpus, double epsilon, std::uint64_t seed,
                          VisitMode mode = VisitMode::kRandom);

// Runs cluster_corpus separately on the malware, goodware and unlabeled
// subsets (in that order) and concatenates the clusters.
ClusterSet cluster_per_label(std::span<const AppFingerprint> corpus, double epsilon, std::uint64_t seed,
                             VisitMode mode = VisitMode::kRandom);

// Exact-duplicate grouping: one cluster per distinct digest set, centroid is
// the first occurrence in input order, clusters ordered by first occurrence.
ClusterSet dedup_at_zero(std::span<const AppFingerprint> corpus);

struct SweepPoint {
  double epsilon;
  std::size_t cluster_count;
};

std::vector<SweepPoint> epsilon_sweep(std::span<const AppFingerprint> corpus, std::span<const double> grid,
                                      std::uint64_t seed, VisitMode mode = VisitMode::kRandom,
                                      bool per_label = false);

// Centroid fingerprint of every cluster, in cluster order. Throws
// MismatchedClusterSet if a cluster names an app missing from `corpus`.
std::vector<AppFingerprint> filter_representatives(std::span<const AppFingerprint> corpus,
                                                   const ClusterSet& clusters);

// "lo:hi:step" (inclusive) or a comma-separated list. Values are snapped to
// 12 decimal places so 0:1:0.1 yields exactly 0.3, 0.7, ...
std::vector<double> parse_epsilon_grid(std::string_view spec);

// Throws InvalidConfig unless 0 <= epsilon <= 1.
void validate_epsilon(double epsilon);

}  // namespace dexdedup
