#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexdedup/extract.hpp"
#include "dexdedup/fingerprint.hpp"

namespace dexdedup {

enum class FeatureSet { kPermissions, kApiCalls, kBoth };

FeatureSet parse_feature_set(std::string_view name);
std::string_view feature_set_name(FeatureSet set);

// The published catalogs in their listed order, spelling normalized:
// 45 permission entries (HARDWARE_TEST appears twice) and 34 API call entries
// (getAppPackageName appears twice).
std::span<const std::string_view> permission_catalog();
std::span<const std::string_view> api_call_catalog();

// Feature columns: catalog entries with repeats removed (first occurrence
// kept), permissions before API calls for kBoth. 44 permissions, 33 API calls.
std::vector<std::string> feature_names(FeatureSet set);

struct FeatureVector {
  std::string app_id;
  Label label = Label::kUnlabeled;
  std::vector<std::uint8_t> bits;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<FeatureVector> rows;

  std::size_t width() const { return columns.size(); }
  bool operator==(const FeatureMatrix&) const = default;
};

// Bit i set iff some name equals API column i exactly (case-sensitive).
std::vector<std::uint8_t> api_call_bits(std::span<const std::string> method_names);
// Bit i set iff some string is "android.permission.<column i>".
std::vector<std::uint8_t> permission_bits(std::span<const std::string> manifest_strings);

// Simple names of every entry in the DEX method-id table.
std::vector<std::string> dex_method_names(std::span<const std::uint8_t> dex);
// Simple names of every method invoked from a smali source.
std::vector<std::string> smali_invoked_names(std::string_view text);

std::vector<std::uint8_t> extract_api_call_features(std::span<const std::uint8_t> dex);
std::vector<std::uint8_t> extract_permission_features(std::span<const std::uint8_t> apk);

// Feature vector of one app on disk (APK, DEX or apktool-style smali
// directory). A bare DEX has no manifest: its permission bits stay zero and
// `warning` (when given) receives a note.
FeatureVector app_features(const std::filesystem::path& path, InputFormat format, FeatureSet set,
                           std::string app_id, Label label, std::string* warning = nullptr);

// Throws WidthMismatch or DuplicateAppId.
FeatureMatrix build_matrix(std::vector<FeatureVector> rows, std::vector<std::string> columns);

// CSV: header "app_id,<feature...>,label", bits as 0/1, label malware|goodware.
std::string write_csv(const FeatureMatrix& matrix);
// Throws CsvParseError (with line number), WidthMismatch, DuplicateAppId.
FeatureMatrix read_csv(std::string_view text);

void write_csv_file(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix read_csv_file(const std::filesystem::path& path);

}  // namespace dexdedup
