#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dexdedup/cluster.hpp"
#include "dexdedup/evaluation.hpp"
#include "dexdedup/extract.hpp"
#include "dexdedup/fingerprint.hpp"
#include "dexdedup/inflation.hpp"
#include "dexdedup/infogain.hpp"

namespace dexdedup {

using Json = nlohmann::json;  // std::map backed: keys are emitted sorted

struct ExtractedApp {
  Label label = Label::kUnlabeled;
  Extraction extraction;
};

// {"app_id", "label", "methods": [{"id", "opcodes": [int...]}], "method_count",
//  "skipped_methods", "filtered_methods", "parse_warnings"}
Json extraction_json(const Extraction& extraction, Label label);
ExtractedApp extraction_from_json(const Json& j);
std::vector<ExtractedApp> read_extraction_jsonl(const std::filesystem::path& path);

// {"app_id", "label", "hashes": [uint64...], "source_method_count"}
Json fingerprint_json(const AppFingerprint& fp);
AppFingerprint fingerprint_from_json(const Json& j);
std::vector<AppFingerprint> read_fingerprint_jsonl(const std::filesystem::path& path);
std::string fingerprint_jsonl(std::span<const AppFingerprint> corpus);

// {"epsilon", "seed", "mode", "per_label", "cluster_count",
//  "clusters": [{"centroid", "members"}]}
Json cluster_report_json(const ClusterSet& set);
ClusterSet cluster_report_from_json(const Json& j);

std::string sweep_csv(std::span<const SweepPoint> points);

Json metrics_json(const Metrics& m);
Json confusion_json(const Confusion& c);
Json eval_report_json(const EvalReport& report);
Json info_gain_json(const InfoGainReport& report);
Json inflation_json(const InflationResult& result);

// Pretty JSON with a trailing newline.
std::string dump_json(const Json& j);
Json read_json_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never see a
// half-written file.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Shortest decimal that round-trips, e.g. 0.1 -> "0.1".
std::string format_real(double v);

}  // namespace dexdedup
