#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dexdedup/extract.hpp"

namespace dexdedup {

enum class Label { kMalware, kGoodware, kUnlabeled };

std::string_view label_name(Label label);
Label parse_label(std::string_view name);

// An app reduced to the set of digests of its opcode subsequences.
// `hashes` is sorted ascending with no duplicates.
struct AppFingerprint {
  std::string app_id;
  Label label = Label::kUnlabeled;
  std::vector<std::uint64_t> hashes;
  std::size_t source_method_count = 0;

  bool operator==(const AppFingerprint&) const = default;
};

// Digest of one opcode subsequence: XXH64 (seed kSubsequenceSeed) over the
// canonical serialization "u32 little-endian length, then the opcode bytes".
std::uint64_t subsequence_digest(std::span<const std::uint8_t> opcodes);

// Throws EmptyApp when `sequences` is empty.
AppFingerprint fingerprint_of(std::span<const OpcodeSequence> sequences, std::string app_id, Label label);

// Sorts and deduplicates `hashes`. `source_method_count` defaults to the
// number of distinct hashes when zero.
AppFingerprint make_fingerprint(std::string app_id, Label label, std::vector<std::uint64_t> hashes,
                                std::size_t source_method_count = 0);

// 1 - |A∩B| / sqrt(|A|·|B|), clamped to [0, 1]. Symmetric bit-for-bit.
double ochiai_from_counts(std::size_t shared, std::size_t size_a, std::size_t size_b);

// Throws EmptyFingerprint if either set is empty.
double ochiai_distance(const AppFingerprint& a, const AppFingerprint& b);

std::size_t shared_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Exact ε-neighbour queries over a fixed corpus. Backed by a sorted
// (digest, app) posting array: only apps sharing at least one digest with the
// query can be closer than 1.0, so for ε < 1 the candidates are gathered from
// the postings and scored with the same expression as ochiai_distance. For
// ε >= 1 every other app qualifies. Results therefore match a naive
// all-pairs scan exactly; no triangle inequality is assumed.
//
// Immutable after construction; concurrent queries are safe.
class NeighborIndex {
 public:
  // Throws DuplicateAppId or EmptyFingerprint.
  explicit NeighborIndex(std::span<const AppFingerprint> corpus);

  std::size_t size() const { return ids_.size(); }
  std::optional<std::size_t> index_of(std::string_view app_id) const;
  const std::string& app_id(std::size_t i) const { return ids_[i]; }

  // Indices j != i with distance(i, j) <= epsilon, ascending. Apps with
  // `excluded[j] != 0` are skipped when `excluded` is non-empty.
  std::vector<std::size_t> neighbors_within(std::size_t i, double epsilon,
                                            std::span<const char> excluded = {}) const;
  std::vector<std::string> neighbors_within(std::string_view app_id, double epsilon) const;

  double distance(std::size_t i, std::size_t j) const;

 private:
  struct Posting {
    std::uint64_t digest;
    std::uint32_t app;
    bool operator<(const Posting& o) const {
      return digest != o.digest ? digest < o.digest : app < o.app;
    }
  };

  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::vector<std::uint64_t>> hashes_;
  std::vector<Posting> postings_;
};

}  // namespace dexdedup
