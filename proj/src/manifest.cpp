#include "dexdedup/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "dexdedup/digest.hpp"
#include "dexdedup/error.hpp"

namespace dexdedup {

void RunManifest::add_input(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs.push_back({f.generic_string(), file_digest(f)});
  } else {
    inputs.push_back({path.generic_string(), file_digest(path)});
  }
}

Json RunManifest::to_json() const {
  Json in = Json::array();
  for (const auto& i : inputs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(i.digest));
    in.push_back({{"path", i.path}, {"xxh64", hex}});
  }
  return Json{{"tool_version", tool_version}, {"subcommand", subcommand}, {"flags", flags},
              {"inputs", std::move(in)},      {"seeds", seeds},           {"timestamp", timestamp}};
}

std::string current_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (*end != '\0' || v < 0) throw Error(ErrorCode::kInvalidConfig, "SOURCE_DATE_EPOCH is not a non-negative integer");
    t = static_cast<std::time_t>(v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".manifest.json";
  return p;
}

}  // namespace dexdedup
