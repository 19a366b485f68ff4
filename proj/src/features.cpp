#include "dexdedup/features.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dexdedup/axml.hpp"
#include "dexdedup/dex_file.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/zip_archive.hpp"

namespace dexdedup {
namespace {

// Listed order. "KILL _BACKGROUND_PROCESS" is normalized to the framework
// name KILL_BACKGROUND_PROCESSES; non-standard legacy names are kept verbatim.
constexpr std::array<std::string_view, 45> kPermissions = {
    "READ_PHONE_STATE",       "WRITE_CONTACTS",          "CALL_PHONE",
    "READ_CONTACTS",          "INTERNET",                "SEND_SMS",
    "DISABLE_KEYGUARD",       "PROCESS_OUTGOING_CALLS",  "RECEIVE_BOOT_COMPLETED",
    "READ_SMS",               "FACTORY_TEST",            "DEVICE_POWER",
    "HARDWARE_TEST",          "CHANGE_WIFI_STATE",       "GET_ACCOUNTS",
    "READ_HISTORY_BOOKMARKS", "WRITE_APN_SETTINGS",      "MODIFY_PHONE_STATE",
    "WRITE_HISTORY_BOOKMARKS", "ACCESS_LOCATION",        "EXPAND_STATUS_BAR",
    "WRITE_EXTERNAL_STORAGE", "RECEIVE_SMS",             "WRITE_SMS",
    "ACCESS_WIFI_STATE",      "MODIFY_AUDIO_SETTINGS",   "ACCESS_NETWORK_STATE",
    "WRITE_SETTINGS",         "READ_EXTERNAL_STORAGE",   "ACCESS_MOCK_LOCATION",
    "USE_CREDENTIALS",        "HARDWARE_TEST",           "VIBRATE",
    "READ_LOGS",              "CHANGE_NETWORK_STATE",    "ACCESS_GPS",
    "WAKE_LOCK",              "ACCESS_COURSE_UPDATES",   "ACCESS_LOCATION_EXTRA_COMMANDS",
    "ACCESS_FINE_LOCATION",   "GET_TASKS",               "RESTART_PACKAGES",
    "MOUNT_UNMOUNT_FILESYSTEMS", "INSTALL_PACKAGES",     "KILL_BACKGROUND_PROCESSES",
};

// Listed order. Four entries carry the framework's capitalization
// (GetLongitude, GetLatitude, abortBroadCast, RequestFocus as printed).
constexpr std::array<std::string_view, 34> kApiCalls = {
    "getNetworkType",      "getNetworkOperator",   "loadClass",
    "getMessage",          "getMethod",            "getClassLoader",
    "getLongitude",        "getLatitude",          "createFromPdu",
    "getInputStream",      "getOutputStream",      "getWifiState",
    "abortBroadcast",      "requestFocus",         "getSubscriberId",
    "getDisplayOriginatingAddress", "sendTextMessage", "getDisplayMessageBody",
    "getPackageInfo",      "getLastKnownLocation", "getAppPackageName",
    "getCookies",          "isProviderEnabled",    "getSimOperatorName",
    "getDeviceId",         "getCertStatus",        "getSimSerialNumber",
    "getLine1Number",      "killProcess",          "exec",
    "getAppPackageName",   "setSerialNumber",      "getSessions",
    "getCredential",
};

constexpr std::string_view kPermissionPrefix = "android.permission.";

std::vector<std::string> unique_in_order(std::span<const std::string_view> names) {
  std::vector<std::string> out;
  std::unordered_set<std::string_view> seen;
  for (const auto n : names) {
    if (seen.insert(n).second) out.emplace_back(n);
  }
  return out;
}

std::vector<std::uint8_t> bits_for(const std::vector<std::string>& columns,
                                   const std::unordered_set<std::string>& present) {
  std::vector<std::uint8_t> bits(columns.size(), 0);
  for (std::size_t i = 0; i < columns.size(); ++i) bits[i] = present.contains(columns[i]) ? 1 : 0;
  return bits;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kCsvParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "permissions") return FeatureSet::kPermissions;
  if (name == "apicalls" || name == "api_calls") return FeatureSet::kApiCalls;
  if (name == "both") return FeatureSet::kBoth;
  throw Error(ErrorCode::kInvalidConfig, "unknown feature set '" + std::string(name) + "'");
}

std::string_view feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::kPermissions: return "permissions";
    case FeatureSet::kApiCalls: return "apicalls";
    case FeatureSet::kBoth: return "both";
  }
  return "both";
}

std::span<const std::string_view> permission_catalog() { return kPermissions; }
std::span<const std::string_view> api_call_catalog() { return kApiCalls; }

std::vector<std::string> feature_names(FeatureSet set) {
  std::vector<std::string> out;
  if (set != FeatureSet::kApiCalls) out = unique_in_order(kPermissions);
  if (set != FeatureSet::kPermissions) {
    for (auto& n : unique_in_order(kApiCalls)) out.push_back(std::move(n));
  }
  return out;
}

std::vector<std::uint8_t> api_call_bits(std::span<const std::string> method_names) {
  const std::unordered_set<std::string> present(method_names.begin(), method_names.end());
  return bits_for(feature_names(FeatureSet::kApiCalls), present);
}

std::vector<std::uint8_t> permission_bits(std::span<const std::string> manifest_strings) {
  std::unordered_set<std::string> present;
  for (const auto& s : manifest_strings) {
    if (s.starts_with(kPermissionPrefix)) present.insert(s.substr(kPermissionPrefix.size()));
  }
  return bits_for(feature_names(FeatureSet::kPermissions), present);
}

std::vector<std::string> dex_method_names(std::span<const std::uint8_t> dex) {
  const DexFile file(dex);
  std::vector<std::string> names;
  names.reserve(file.method_count());
  for (std::uint32_t i = 0; i < file.method_count(); ++i) names.push_back(file.method_name(i));
  return names;
}

std::vector<std::string> smali_invoked_names(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string_view::npos || line.substr(start).rfind("invoke-", 0) != 0) continue;
    const auto arrow = line.find("->");
    if (arrow == std::string_view::npos) continue;
    const auto paren = line.find('(', arrow);
    if (paren == std::string_view::npos) continue;
    names.emplace_back(line.substr(arrow + 2, paren - arrow - 2));
  }
  return names;
}

std::vector<std::uint8_t> extract_api_call_features(std::span<const std::uint8_t> dex) {
  const auto names = dex_method_names(dex);
  return api_call_bits(names);
}

std::vector<std::uint8_t> extract_permission_features(std::span<const std::uint8_t> apk) {
  const auto strings = apk_manifest_strings(apk);
  return permission_bits(strings);
}

FeatureVector app_features(const std::filesystem::path& path, InputFormat format, FeatureSet set,
                           std::string app_id, Label label, std::string* warning) {
  namespace fs = std::filesystem;
  std::vector<std::string> methods;
  std::vector<std::string> manifest;
  bool have_manifest = false;
  std::vector<std::string> notes;

  if (fs::is_directory(path) || format == InputFormat::kSmali) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
      for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".smali") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (fs::exists(path / "AndroidManifest.xml")) {
        manifest = manifest_strings(read_file_bytes(path / "AndroidManifest.xml"));
        have_manifest = true;
      }
    } else {
      files.push_back(path);
    }
    for (const auto& f : files) {
      const auto bytes = read_file_bytes(f);
      auto names = smali_invoked_names(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      methods.insert(methods.end(), names.begin(), names.end());
    }
  } else {
    const auto bytes = read_file_bytes(path);
    if (format == InputFormat::kAuto) format = has_zip_magic(bytes) ? InputFormat::kApk : InputFormat::kDex;
    if (format == InputFormat::kApk) {
      const ZipArchive zip(bytes);
      std::vector<std::string> dex_names;
      for (const auto& e : zip.entries()) {
        if (e.name.starts_with("classes") && e.name.ends_with(".dex") && e.name.find('/') == std::string::npos) {
          dex_names.push_back(e.name);
        }
      }
      std::sort(dex_names.begin(), dex_names.end());
      if (dex_names.empty()) throw Error(ErrorCode::kNoDexEntries, "no classes*.dex member in the APK");
      std::size_t parsed = 0;
      for (const auto& n : dex_names) {
        // Same policy as extraction: a damaged member is noted and skipped.
        try {
          auto names = dex_method_names(zip.read(*zip.find(n)));
          methods.insert(methods.end(), names.begin(), names.end());
          ++parsed;
        } catch (const Error& e) {
          notes.push_back(n + ": " + e.what());
        }
      }
      if (parsed == 0) throw Error(ErrorCode::kMalformedDex, "no readable DEX member: " + notes.front());
      if (set != FeatureSet::kApiCalls) {
        manifest = apk_manifest_strings(bytes);
        have_manifest = true;
      }
    } else {
      methods = dex_method_names(bytes);
    }
  }

  if (!have_manifest && set != FeatureSet::kApiCalls) notes.push_back("no manifest available, permission features are all zero");
  if (warning != nullptr) {
    warning->clear();
    for (const auto& n : notes) *warning += (warning->empty() ? app_id + ": " : "; ") + n;
  }

  FeatureVector v{std::move(app_id), label, {}};
  if (set != FeatureSet::kApiCalls) v.bits = permission_bits(manifest);
  if (set != FeatureSet::kPermissions) {
    const auto api = api_call_bits(methods);
    v.bits.insert(v.bits.end(), api.begin(), api.end());
  }
  return v;
}

FeatureMatrix build_matrix(std::vector<FeatureVector> rows, std::vector<std::string> columns) {
  std::unordered_set<std::string> ids;
  for (const auto& r : rows) {
    if (r.bits.size() != columns.size()) {
      throw Error(ErrorCode::kWidthMismatch, "row '" + r.app_id + "' has " + std::to_string(r.bits.size()) +
                                                 " features, expected " + std::to_string(columns.size()));
    }
    if (!ids.insert(r.app_id).second) throw Error(ErrorCode::kDuplicateAppId, "duplicate app id '" + r.app_id + "'");
  }
  return FeatureMatrix{std::move(columns), std::move(rows)};
}

std::string write_csv(const FeatureMatrix& matrix) {
  std::string out = "app_id";
  for (const auto& c : matrix.columns) out += "," + csv_field(c);
  out += ",label\n";
  for (const auto& r : matrix.rows) {
    if (r.label == Label::kUnlabeled) {
      throw Error(ErrorCode::kInvalidInput, "row '" + r.app_id + "' is unlabeled; CSV rows need malware|goodware");
    }
    out += csv_field(r.app_id);
    for (const auto b : r.bits) out += b ? ",1" : ",0";
    out += ",";
    out += label_name(r.label);
    out += "\n";
  }
  return out;
}

FeatureMatrix read_csv(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  if (lines.empty()) throw Error(ErrorCode::kCsvParseError, "line 1: missing header");

  const auto header = split_csv_line(lines[0], 1);
  if (header.size() < 2 || header.back() != "label") {
    throw Error(ErrorCode::kCsvParseError, "line 1: header must end with 'label'");
  }
  const bool has_ids = header.front() == "app_id";
  std::vector<std::string> columns(header.begin() + (has_ids ? 1 : 0), header.end() - 1);

  std::vector<FeatureVector> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i], line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kWidthMismatch, "line " + std::to_string(line_no) + ": " +
                                                 std::to_string(fields.size()) + " fields, header has " +
                                                 std::to_string(header.size()));
    }
    FeatureVector v;
    v.app_id = has_ids ? fields.front() : "row-" + std::to_string(i);
    const std::string& label = fields.back();
    if (label == "malware") {
      v.label = Label::kMalware;
    } else if (label == "goodware") {
      v.label = Label::kGoodware;
    } else {
      throw Error(ErrorCode::kCsvParseError, "line " + std::to_string(line_no) + ": bad label '" + label + "'");
    }
    for (std::size_t f = has_ids ? 1 : 0; f + 1 < fields.size(); ++f) {
      if (fields[f] == "1") {
        v.bits.push_back(1);
      } else if (fields[f] == "0") {
        v.bits.push_back(0);
      } else {
        throw Error(ErrorCode::kCsvParseError, "line " + std::to_string(line_no) + ": feature value '" + fields[f] +
                                                   "' is not 0 or 1");
      }
    }
    rows.push_back(std::move(v));
  }
  return build_matrix(std::move(rows), std::move(columns));
}

void write_csv_file(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << write_csv(matrix);
}

FeatureMatrix read_csv_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return read_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace dexdedup
