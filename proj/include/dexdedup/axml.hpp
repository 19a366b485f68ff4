#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dexdedup {

// All strings of the string pool of an Android binary XML document.
// Throws MalformedManifest if the pool cannot be decoded.
std::vector<std::string> binary_xml_strings(std::span<const std::uint8_t> bytes);

// Strings of an AndroidManifest.xml payload: the string pool for binary XML,
// or every `android.permission.*` token for a plain-text manifest.
std::vector<std::string> manifest_strings(std::span<const std::uint8_t> bytes);

// Manifest strings of an APK. Throws NoManifest when AndroidManifest.xml is
// absent.
std::vector<std::string> apk_manifest_strings(std::span<const std::uint8_t> apk);

// Binary XML manifest declaring `permissions` (full names, e.g.
// "android.permission.SEND_SMS") for `package_name`.
std::vector<std::uint8_t> write_binary_manifest(const std::string& package_name,
                                                const std::vector<std::string>& permissions);

}  // namespace dexdedup
