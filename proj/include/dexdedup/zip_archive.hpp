#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dexdedup {

struct ZipEntry {
  std::string name;
  std::uint16_t method = 0;  // 0 stored, 8 deflate
  std::uint32_t crc32 = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t uncompressed_size = 0;
  std::uint32_t local_header_offset = 0;
};

// Minimal zip reader for APK containers: central directory walk plus stored
// and deflate members. ZIP64 and encryption are rejected with MalformedZip.
// Like DexFile, the archive is a view; `bytes` must outlive it.
class ZipArchive {
 public:
  explicit ZipArchive(std::span<const std::uint8_t> bytes);

  const std::vector<ZipEntry>& entries() const { return entries_; }
  std::optional<ZipEntry> find(std::string_view name) const;
  std::vector<std::uint8_t> read(const ZipEntry& entry) const;

 private:
  std::span<const std::uint8_t> bytes_;
  std::vector<ZipEntry> entries_;
};

bool has_zip_magic(std::span<const std::uint8_t> bytes);

// Writes a zip archive with the given members in order. Used to build
// synthetic APKs; `deflate` selects compression method 8 for every member.
std::vector<std::uint8_t> write_zip(
    const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& members, bool deflate);

}  // namespace dexdedup
