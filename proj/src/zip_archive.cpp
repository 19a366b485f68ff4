#include "dexdedup/zip_archive.hpp"

#include <zlib.h>

#include <algorithm>

#include "dexdedup/error.hpp"

namespace dexdedup {
namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::size_t kEocdSize = 22;
constexpr std::size_t kMaxComment = 0xFFFF;
constexpr std::uint32_t kMaxMemberSize = 1u << 30;

std::uint16_t rd16(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 2 > b.size()) throw Error(ErrorCode::kMalformedZip, "read past end at " + std::to_string(off));
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t rd32(std::span<const std::uint8_t> b, std::size_t off) {
  if (off + 4 > b.size()) throw Error(ErrorCode::kMalformedZip, "read past end at " + std::to_string(off));
  return std::uint32_t{b[off]} | (std::uint32_t{b[off + 1]} << 8) | (std::uint32_t{b[off + 2]} << 16) |
         (std::uint32_t{b[off + 3]} << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> raw_deflate(const std::vector<std::uint8_t>& data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::kIo, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::kIo, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

}  // namespace

bool has_zip_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' && bytes[2] == 3 && bytes[3] == 4;
}

ZipArchive::ZipArchive(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  if (bytes.size() < kEocdSize) throw Error(ErrorCode::kMalformedZip, "file too small for a zip archive");

  std::size_t eocd = bytes.size() - kEocdSize;
  const std::size_t floor = bytes.size() > kEocdSize + kMaxComment ? bytes.size() - kEocdSize - kMaxComment : 0;
  while (rd32(bytes, eocd) != kEndOfCentralDirSig) {
    if (eocd == floor) throw Error(ErrorCode::kMalformedZip, "end of central directory not found");
    --eocd;
  }
  const std::uint16_t count = rd16(bytes, eocd + 10);
  const std::uint32_t cd_size = rd32(bytes, eocd + 12);
  const std::uint32_t cd_off = rd32(bytes, eocd + 16);
  if (cd_off == 0xFFFFFFFF || count == 0xFFFF) throw Error(ErrorCode::kMalformedZip, "ZIP64 archives are not supported");
  if (std::uint64_t{cd_off} + cd_size > bytes.size()) {
    throw Error(ErrorCode::kMalformedZip, "central directory out of bounds at " + std::to_string(cd_off));
  }

  std::size_t off = cd_off;
  entries_.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (rd32(bytes, off) != kCentralHeaderSig) {
      throw Error(ErrorCode::kMalformedZip, "bad central directory header at " + std::to_string(off));
    }
    ZipEntry e;
    e.method = rd16(bytes, off + 10);
    e.crc32 = rd32(bytes, off + 16);
    e.compressed_size = rd32(bytes, off + 20);
    e.uncompressed_size = rd32(bytes, off + 24);
    const std::uint16_t name_len = rd16(bytes, off + 28);
    const std::uint16_t extra_len = rd16(bytes, off + 30);
    const std::uint16_t comment_len = rd16(bytes, off + 32);
    e.local_header_offset = rd32(bytes, off + 42);
    if (off + 46 + name_len > bytes.size()) throw Error(ErrorCode::kMalformedZip, "entry name out of bounds");
    e.name.assign(reinterpret_cast<const char*>(bytes.data() + off + 46), name_len);
    entries_.push_back(std::move(e));
    off += 46 + std::size_t{name_len} + extra_len + comment_len;
  }
}

std::optional<ZipEntry> ZipArchive::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ZipEntry& e) { return e.name == name; });
  if (it == entries_.end()) return std::nullopt;
  return *it;
}

std::vector<std::uint8_t> ZipArchive::read(const ZipEntry& entry) const {
  if (entry.compressed_size == 0xFFFFFFFF || entry.uncompressed_size == 0xFFFFFFFF) {
    throw Error(ErrorCode::kMalformedZip, entry.name + ": ZIP64 member not supported");
  }
  if (entry.uncompressed_size > kMaxMemberSize) {
    throw Error(ErrorCode::kMalformedZip, entry.name + ": member larger than 1 GiB");
  }
  const std::size_t lh = entry.local_header_offset;
  if (rd32(bytes_, lh) != kLocalHeaderSig) {
    throw Error(ErrorCode::kMalformedZip, entry.name + ": bad local header at " + std::to_string(lh));
  }
  const std::size_t data_off = lh + 30 + rd16(bytes_, lh + 26) + rd16(bytes_, lh + 28);
  if (std::uint64_t{data_off} + entry.compressed_size > bytes_.size()) {
    throw Error(ErrorCode::kMalformedZip, entry.name + ": member data out of bounds");
  }
  const auto data = bytes_.subspan(data_off, entry.compressed_size);

  std::vector<std::uint8_t> out;
  if (entry.method == 0) {
    out.assign(data.begin(), data.end());
  } else if (entry.method == 8) {
    out.resize(entry.uncompressed_size);
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw Error(ErrorCode::kIo, "inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != entry.uncompressed_size) {
      throw Error(ErrorCode::kMalformedZip, entry.name + ": corrupt deflate stream");
    }
  } else {
    throw Error(ErrorCode::kMalformedZip,
                entry.name + ": unsupported compression method " + std::to_string(entry.method));
  }
  const auto crc = ::crc32(0L, out.data(), static_cast<uInt>(out.size()));
  if (crc != entry.crc32) throw Error(ErrorCode::kMalformedZip, entry.name + ": CRC mismatch");
  return out;
}

std::vector<std::uint8_t> write_zip(
    const std::vector<std::pair<std::string, std::vector<std::uint8_t>>>& members, bool deflate) {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> central;
  for (const auto& [name, data] : members) {
    const std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, data.data(), static_cast<uInt>(data.size())));
    const std::vector<std::uint8_t> body = deflate ? raw_deflate(data) : data;
    const std::uint16_t method = deflate ? 8 : 0;
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalHeaderSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, method);
    put16(out, 0);   // time
    put16(out, 0x21);  // date: 1980-01-01
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(body.size()));
    put32(out, static_cast<std::uint32_t>(data.size()));
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out.insert(out.end(), name.begin(), name.end());
    out.insert(out.end(), body.begin(), body.end());

    put32(central, kCentralHeaderSig);
    put16(central, 20);  // made by
    put16(central, 20);  // needed
    put16(central, 0);
    put16(central, method);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(body.size()));
    put32(central, static_cast<std::uint32_t>(data.size()));
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central.insert(central.end(), name.begin(), name.end());
  }
  const auto cd_off = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, kEndOfCentralDirSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(members.size()));
  put16(out, static_cast<std::uint16_t>(members.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_off);
  put16(out, 0);
  return out;
}

}  // namespace dexdedup
