#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dexdedup/extract.hpp"
#include "dexdedup/features.hpp"
#include "dexdedup/fingerprint.hpp"

namespace dexdedup {

// A labelled toy corpus with known duplication. Features are drawn from
// class-conditional Bernoulli distributions that overlap, so labels are
// learnable but not perfectly separable from unseen apps; every distinct
// app has its own feature vector, so a model can memorize it.
struct SyntheticConfig {
  std::size_t distinct_apps = 50;
  std::size_t duplication = 4;          // exact copies of every distinct app
  double malware_fraction = 0.5;
  std::size_t family_size = 5;          // distinct apps sharing a code base
  double family_divergence = 0.2;       // share of a member's methods not taken from the base
  std::size_t methods_per_app = 24;
  std::size_t informative_features = 12;
  double signal = 0.35;                 // p(bit | malware) - p(bit | goodware), informative columns
  std::uint64_t seed = 1;
};

struct SyntheticApp {
  std::string app_id;                   // "<label>/syn0007_c2"
  Label label = Label::kUnlabeled;
  std::size_t original = 0;             // index of the distinct app this copies
  std::vector<OpcodeSequence> methods;
  std::vector<std::string> permissions; // full names, "android.permission.*"
  std::vector<std::string> api_calls;
};

struct SyntheticCorpus {
  std::vector<SyntheticApp> apps;

  std::vector<AppFingerprint> fingerprints() const;
  FeatureMatrix features(FeatureSet set = FeatureSet::kBoth) const;
};

// Throws InvalidConfig for zero apps, zero duplication or a malware fraction
// that leaves a class empty.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config);

// APK with a binary manifest and one classes.dex.
std::vector<std::uint8_t> synthetic_apk(const SyntheticApp& app);

// Writes <dir>/<label>/<name>.apk for every app.
void materialize_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace dexdedup
