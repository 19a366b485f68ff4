#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dexdedup/cluster.hpp"
#include "dexdedup/features.hpp"
#include "dexdedup/forest.hpp"
#include "dexdedup/manifest.hpp"

namespace dexdedup {

struct PipelineConfig {
  std::filesystem::path input_dir;  // holds malware/ and goodware/
  std::filesystem::path out_dir;
  std::vector<double> sweep_grid;   // empty = 0:1:0.1
  std::vector<double> filter_epsilons{0.0, 0.1, 0.2};
  std::uint64_t seed = 42;
  FeatureSet feature_set = FeatureSet::kBoth;  // kBoth evaluates each set separately
  ForestConfig forest;
  std::size_t kfold = 10;
  bool balance = true;
  bool per_label = true;
  VisitMode mode = VisitMode::kRandom;
  std::size_t min_length = 1;
  std::size_t inflation_seeds = 20;
  bool keep_going = false;          // skip apps that fail to extract instead of aborting
  unsigned jobs = 0;
};

// Throws InvalidConfig describing the first bad field.
void validate_pipeline_config(const PipelineConfig& config);

// Runs extract -> fingerprint -> sweep -> cluster/filter -> features ->
// infogain -> evaluate -> inflation into `out_dir`. A `.incomplete` marker
// exists for the duration of the run and is left behind on failure. Errors
// are rethrown with the stage name (and input file when there is one).
// Progress goes to `log` when non-null.
void run_pipeline(const PipelineConfig& config, RunManifest manifest, std::ostream* log = nullptr);

// Human-readable summary of an artifact directory. Throws MissingArtifact.
std::string pipeline_report(const std::filesystem::path& artifact_dir);

// Apps under <dir>/malware and <dir>/goodware, sorted; ids "<label>/<stem>".
struct AppInput {
  std::filesystem::path path;
  std::string app_id;
  Label label = Label::kUnlabeled;
};
std::vector<AppInput> discover_apps(const std::filesystem::path& dir);

}  // namespace dexdedup
