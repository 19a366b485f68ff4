#include "dexdedup/fingerprint.hpp"

#include <algorithm>
#include <cmath>

#include "dexdedup/digest.hpp"
#include "dexdedup/error.hpp"

namespace dexdedup {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kMalware: return "malware";
    case Label::kGoodware: return "goodware";
    case Label::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label parse_label(std::string_view name) {
  if (name == "malware") return Label::kMalware;
  if (name == "goodware") return Label::kGoodware;
  if (name == "unlabeled") return Label::kUnlabeled;
  throw Error(ErrorCode::kInvalidInput, "unknown label '" + std::string(name) + "'");
}

std::uint64_t subsequence_digest(std::span<const std::uint8_t> opcodes) {
  std::vector<std::uint8_t> buf;
  buf.reserve(opcodes.size() + 4);
  const auto n = static_cast<std::uint32_t>(opcodes.size());
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  buf.insert(buf.end(), opcodes.begin(), opcodes.end());
  return digest64(buf, kSubsequenceSeed);
}

AppFingerprint make_fingerprint(std::string app_id, Label label, std::vector<std::uint64_t> hashes,
                                std::size_t source_method_count) {
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
  AppFingerprint fp{std::move(app_id), label, std::move(hashes), source_method_count};
  if (fp.source_method_count == 0) fp.source_method_count = fp.hashes.size();
  return fp;
}

AppFingerprint fingerprint_of(std::span<const OpcodeSequence> sequences, std::string app_id, Label label) {
  if (sequences.empty()) throw Error(ErrorCode::kEmptyApp, "app '" + app_id + "' has no opcode subsequences");
  std::vector<std::uint64_t> hashes;
  hashes.reserve(sequences.size());
  for (const auto& seq : sequences) hashes.push_back(subsequence_digest(seq.opcodes));
  return make_fingerprint(std::move(app_id), label, std::move(hashes), sequences.size());
}

double ochiai_from_counts(std::size_t shared, std::size_t size_a, std::size_t size_b) {
  // The product is commutative in IEEE arithmetic, so swapping a and b cannot
  // change the result.
  const double similarity =
      static_cast<double>(shared) / std::sqrt(static_cast<double>(size_a) * static_cast<double>(size_b));
  return std::clamp(1.0 - similarity, 0.0, 1.0);
}

std::size_t shared_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

double ochiai_distance(const AppFingerprint& a, const AppFingerprint& b) {
  if (a.hashes.empty() || b.hashes.empty()) {
    throw Error(ErrorCode::kEmptyFingerprint,
                "distance undefined for empty fingerprint ('" + (a.hashes.empty() ? a.app_id : b.app_id) + "')");
  }
  return ochiai_from_counts(shared_count(a.hashes, b.hashes), a.hashes.size(), b.hashes.size());
}

NeighborIndex::NeighborIndex(std::span<const AppFingerprint> corpus) {
  ids_.reserve(corpus.size());
  hashes_.reserve(corpus.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& fp = corpus[i];
    if (fp.hashes.empty()) throw Error(ErrorCode::kEmptyFingerprint, "app '" + fp.app_id + "' has an empty fingerprint");
    if (!by_id_.emplace(fp.app_id, i).second) throw Error(ErrorCode::kDuplicateAppId, "duplicate app id '" + fp.app_id + "'");
    ids_.push_back(fp.app_id);
    auto h = fp.hashes;
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    total += h.size();
    hashes_.push_back(std::move(h));
  }
  postings_.reserve(total);
  for (std::size_t i = 0; i < hashes_.size(); ++i) {
    for (const auto d : hashes_[i]) postings_.push_back({d, static_cast<std::uint32_t>(i)});
  }
  std::sort(postings_.begin(), postings_.end());
}

std::optional<std::size_t> NeighborIndex::index_of(std::string_view app_id) const {
  const auto it = by_id_.find(std::string(app_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

double NeighborIndex::distance(std::size_t i, std::size_t j) const {
  return ochiai_from_counts(shared_count(hashes_[i], hashes_[j]), hashes_[i].size(), hashes_[j].size());
}

std::vector<std::size_t> NeighborIndex::neighbors_within(std::size_t i, double epsilon,
                                                         std::span<const char> excluded) const {
  auto skip = [&](std::size_t j) { return j == i || (!excluded.empty() && excluded[j] != 0); };
  std::vector<std::size_t> out;
  if (epsilon >= 1.0) {
    for (std::size_t j = 0; j < ids_.size(); ++j) {
      if (!skip(j)) out.push_back(j);
    }
    return out;
  }

  std::vector<std::uint32_t> candidates;
  for (const auto d : hashes_[i]) {
    auto it = std::lower_bound(postings_.begin(), postings_.end(), Posting{d, 0});
    for (; it != postings_.end() && it->digest == d; ++it) {
      if (!skip(it->app)) candidates.push_back(it->app);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  const std::size_t size_i = hashes_[i].size();
  for (std::size_t k = 0; k < candidates.size();) {
    std::size_t run = k;
    while (run < candidates.size() && candidates[run] == candidates[k]) ++run;
    const std::size_t j = candidates[k];
    if (ochiai_from_counts(run - k, size_i, hashes_[j].size()) <= epsilon) out.push_back(j);
    k = run;
  }
  return out;
}

std::vector<std::string> NeighborIndex::neighbors_within(std::string_view app_id, double epsilon) const {
  const auto i = index_of(app_id);
  if (!i) throw Error(ErrorCode::kInvalidInput, "unknown app id '" + std::string(app_id) + "'");
  std::vector<std::string> out;
  for (const auto j : neighbors_within(*i, epsilon)) out.push_back(ids_[j]);
  return out;
}

}  // namespace dexdedup
