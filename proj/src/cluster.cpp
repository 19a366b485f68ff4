#include "dexdedup/cluster.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dexdedup/error.hpp"
#include "dexdedup/rng.hpp"

namespace dexdedup {
namespace {

void require_corpus(std::span<const AppFingerprint> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot cluster an empty corpus");
}

double snap(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

void validate_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    std::ostringstream os;
    os << "epsilon " << epsilon << " outside [0, 1]";
    throw Error(ErrorCode::kInvalidConfig, os.str());
  }
}

ClusterSet cluster_corpus(std::span<const AppFingerprint> corpus, double epsilon, std::uint64_t seed,
                          VisitMode mode) {
  require_corpus(corpus);
  validate_epsilon(epsilon);
  const NeighborIndex index(corpus);

  std::vector<std::size_t> visit(corpus.size());
  std::iota(visit.begin(), visit.end(), 0);
  if (mode == VisitMode::kRandom) {
    // Walking a uniform permutation and skipping clustered apps draws each
    // centroid uniformly from the apps still unvisited.
    Rng rng(seed);
    rng.shuffle(visit);
  }

  ClusterSet out{epsilon, seed, mode, false, {}};
  std::vector<char> clustered(corpus.size(), 0);
  for (const std::size_t centroid : visit) {
    if (clustered[centroid]) continue;
    clustered[centroid] = 1;
    Cluster c;
    c.centroid_id = corpus[centroid].app_id;
    c.member_ids.push_back(c.centroid_id);
    for (const std::size_t j : index.neighbors_within(centroid, epsilon, clustered)) {
      clustered[j] = 1;
      c.member_ids.push_back(corpus[j].app_id);
    }
    out.clusters.push_back(std::move(c));
  }
  return out;
}

ClusterSet cluster_per_label(std::span<const AppFingerprint> corpus, double epsilon, std::uint64_t seed,
                             VisitMode mode) {
  require_corpus(corpus);
  validate_epsilon(epsilon);
  ClusterSet out{epsilon, seed, mode, true, {}};
  for (const Label label : {Label::kMalware, Label::kGoodware, Label::kUnlabeled}) {
    std::vector<AppFingerprint> subset;
    for (const auto& fp : corpus) {
      if (fp.label == label) subset.push_back(fp);
    }
    if (subset.empty()) continue;
    auto part = cluster_corpus(subset, epsilon, seed, mode);
    for (auto& c : part.clusters) out.clusters.push_back(std::move(c));
  }
  return out;
}

ClusterSet dedup_at_zero(std::span<const AppFingerprint> corpus) {
  require_corpus(corpus);
  ClusterSet out{0.0, 0, VisitMode::kOrdered, false, {}};
  std::map<std::vector<std::uint64_t>, std::size_t> groups;
  std::unordered_set<std::string> seen;
  for (const auto& fp : corpus) {
    if (fp.hashes.empty()) throw Error(ErrorCode::kEmptyFingerprint, "app '" + fp.app_id + "' has an empty fingerprint");
    if (!seen.insert(fp.app_id).second) throw Error(ErrorCode::kDuplicateAppId, "duplicate app id '" + fp.app_id + "'");
    auto [it, inserted] = groups.emplace(fp.hashes, out.clusters.size());
    if (inserted) {
      out.clusters.push_back(Cluster{fp.app_id, {fp.app_id}});
    } else {
      out.clusters[it->second].member_ids.push_back(fp.app_id);
    }
  }
  return out;
}

std::vector<SweepPoint> epsilon_sweep(std::span<const AppFingerprint> corpus, std::span<const double> grid,
                                      std::uint64_t seed, VisitMode mode, bool per_label) {
  for (const double e : grid) validate_epsilon(e);
  std::vector<SweepPoint> out;
  out.reserve(grid.size());
  for (const double e : grid) {
    const auto set = per_label ? cluster_per_label(corpus, e, seed, mode) : cluster_corpus(corpus, e, seed, mode);
    out.push_back({e, set.clusters.size()});
  }
  return out;
}

std::vector<AppFingerprint> filter_representatives(std::span<const AppFingerprint> corpus,
                                                   const ClusterSet& clusters) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_id.emplace(corpus[i].app_id, i);
  std::vector<AppFingerprint> out;
  out.reserve(clusters.clusters.size());
  for (const auto& c : clusters.clusters) {
    for (const auto& m : c.member_ids) {
      if (!by_id.contains(m)) {
        throw Error(ErrorCode::kMismatchedClusterSet, "cluster member '" + m + "' is not in the corpus");
      }
    }
    const auto it = by_id.find(c.centroid_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kMismatchedClusterSet, "centroid '" + c.centroid_id + "' is not in the corpus");
    }
    out.push_back(corpus[it->second]);
  }
  return out;
}

std::vector<double> parse_epsilon_grid(std::string_view spec) {
  auto number = [&](std::string_view s) {
    std::size_t used = 0;
    const std::string str(s);
    double v = 0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != str.size() || str.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "bad number '" + str + "' in epsilon grid");
    }
    return v;
  };

  std::vector<double> out;
  if (spec.find(':') != std::string_view::npos) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "grid must be lo:hi:step");
    const double lo = number(spec.substr(0, c1));
    const double hi = number(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(spec.substr(c2 + 1));
    if (!(step > 0) || hi < lo) throw Error(ErrorCode::kInvalidConfig, "grid needs lo <= hi and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(snap(lo + static_cast<double>(i) * step));
  } else {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      const auto comma = spec.find(',', pos);
      const auto item = spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      out.push_back(number(item));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  for (const double e : out) validate_epsilon(e);
  return out;
}

}  // namespace dexdedup
