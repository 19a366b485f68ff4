#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dexdedup/jsonl.hpp"

namespace dexdedup {

inline constexpr char kToolVersion[] = "0.1.0";

struct InputDigest {
  std::string path;
  std::uint64_t digest = 0;  // XXH64 of the file contents (seed 0)
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string subcommand;
  std::map<std::string, std::string> flags;
  std::vector<InputDigest> inputs;
  std::vector<std::uint64_t> seeds;
  std::string timestamp;  // ISO 8601 UTC; the only wall-clock field

  // Digests `path`; a directory contributes every regular file below it in
  // lexicographic order.
  void add_input(const std::filesystem::path& path);
  Json to_json() const;
};

// SOURCE_DATE_EPOCH when set, otherwise the current time.
std::string current_timestamp();

// `<artifact>.manifest.json` next to a single-file output.
std::filesystem::path sidecar_path(const std::filesystem::path& artifact);

}  // namespace dexdedup
