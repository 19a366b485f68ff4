#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

namespace dexdedup {

// Seed for opcode-subsequence digests. Changing it changes every fingerprint.
inline constexpr std::uint64_t kSubsequenceSeed = 0x0DE7DED0C0FFEE11ULL;

// XXH64 of `bytes` under `seed`.
std::uint64_t digest64(std::span<const std::uint8_t> bytes, std::uint64_t seed);
std::uint64_t digest64(std::string_view bytes, std::uint64_t seed);

// Content hash of a file (seed 0), used for input digests in run manifests.
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace dexdedup
