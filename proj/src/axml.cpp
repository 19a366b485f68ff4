#include "dexdedup/axml.hpp"

#include <regex>
#include <string_view>

#include "dexdedup/error.hpp"
#include "dexdedup/zip_archive.hpp"

namespace dexdedup {
namespace {

constexpr std::uint16_t kResStringPoolType = 0x0001;
constexpr std::uint16_t kResXmlType = 0x0003;
constexpr std::uint16_t kResXmlStartNamespaceType = 0x0100;
constexpr std::uint16_t kResXmlEndNamespaceType = 0x0101;
constexpr std::uint16_t kResXmlStartElementType = 0x0102;
constexpr std::uint16_t kResXmlEndElementType = 0x0103;
constexpr std::uint32_t kUtf8Flag = 1u << 8;
constexpr std::uint32_t kNoIndex = 0xFFFFFFFF;

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8(std::size_t off) const {
    check(off, 1);
    return b_[off];
  }
  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    return static_cast<std::uint16_t>(b_[off] | (b_[off + 1] << 8));
  }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    return std::uint32_t{b_[off]} | (std::uint32_t{b_[off + 1]} << 8) |
           (std::uint32_t{b_[off + 2]} << 16) | (std::uint32_t{b_[off + 3]} << 24);
  }
  void check(std::size_t off, std::size_t n) const {
    if (off > b_.size() || n > b_.size() - off) {
      throw Error(ErrorCode::kMalformedManifest, "string pool read past end at offset " + std::to_string(off));
    }
  }

 private:
  std::span<const std::uint8_t> b_;
};

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string read_utf16(const Cursor& c, std::size_t off) {
  std::uint32_t len = c.u16(off);
  off += 2;
  if (len & 0x8000) {
    len = ((len & 0x7FFF) << 16) | c.u16(off);
    off += 2;
  }
  c.check(off, std::size_t{len} * 2);
  std::string out;
  out.reserve(len);
  for (std::uint32_t i = 0; i < len; ++i) {
    std::uint32_t unit = c.u16(off + 2 * i);
    if (unit >= 0xD800 && unit < 0xDC00 && i + 1 < len) {
      const std::uint32_t low = c.u16(off + 2 * (i + 1));
      if (low >= 0xDC00 && low < 0xE000) {
        unit = 0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00);
        ++i;
      }
    }
    append_utf8(out, unit);
  }
  return out;
}

std::string read_utf8(const Cursor& c, std::size_t off) {
  // utf16 length, then utf8 byte length; each 1 or 2 bytes.
  auto varlen = [&](std::size_t& o) {
    std::uint32_t v = c.u8(o++);
    if (v & 0x80) v = ((v & 0x7F) << 8) | c.u8(o++);
    return v;
  };
  varlen(off);
  const std::uint32_t bytes = varlen(off);
  c.check(off, bytes);
  std::string out(bytes, '\0');
  for (std::uint32_t i = 0; i < bytes; ++i) out[i] = static_cast<char>(c.u8(off + i));
  return out;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void patch32(std::vector<std::uint8_t>& out, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

std::vector<std::string> binary_xml_strings(std::span<const std::uint8_t> bytes) {
  const Cursor c(bytes);
  if (c.u16(0) != kResXmlType) throw Error(ErrorCode::kMalformedManifest, "not an Android binary XML document");
  std::size_t off = c.u16(2);
  while (off + 8 <= bytes.size()) {
    const std::uint16_t type = c.u16(off);
    const std::uint16_t header_size = c.u16(off + 2);
    const std::uint32_t chunk_size = c.u32(off + 4);
    if (chunk_size < 8) throw Error(ErrorCode::kMalformedManifest, "chunk of size < 8 at offset " + std::to_string(off));
    if (type == kResStringPoolType) {
      c.check(off, chunk_size);
      const std::uint32_t count = c.u32(off + 8);
      const std::uint32_t flags = c.u32(off + 16);
      const std::uint32_t strings_start = c.u32(off + 20);
      c.check(off + header_size, std::size_t{count} * 4);
      std::vector<std::string> strings;
      strings.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t s = off + std::size_t{strings_start} + c.u32(off + header_size + 4 * i);
        if (s >= off + chunk_size) throw Error(ErrorCode::kMalformedManifest, "string offset outside pool");
        strings.push_back((flags & kUtf8Flag) ? read_utf8(c, s) : read_utf16(c, s));
      }
      return strings;
    }
    off += chunk_size;
  }
  throw Error(ErrorCode::kMalformedManifest, "no string pool chunk");
}

std::vector<std::string> manifest_strings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 0x03 && bytes[1] == 0x00) return binary_xml_strings(bytes);
  const std::string text(bytes.begin(), bytes.end());
  if (text.find('<') == std::string::npos) throw Error(ErrorCode::kMalformedManifest, "neither binary nor text XML");
  static const std::regex token("android\\.permission\\.[A-Za-z0-9_]+");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

std::vector<std::string> apk_manifest_strings(std::span<const std::uint8_t> apk) {
  const ZipArchive zip(apk);
  const auto entry = zip.find("AndroidManifest.xml");
  if (!entry) throw Error(ErrorCode::kNoManifest, "AndroidManifest.xml not found in archive");
  const auto bytes = zip.read(*entry);
  return manifest_strings(bytes);
}

std::vector<std::uint8_t> write_binary_manifest(const std::string& package_name,
                                                const std::vector<std::string>& permissions) {
  std::vector<std::string> pool = {"android", "http://schemas.android.com/apk/res/android", "manifest",
                                   "package", "uses-permission", "name", package_name};
  const std::uint32_t kPrefix = 0, kUri = 1, kManifest = 2, kPackage = 3, kUses = 4, kName = 5, kPkgValue = 6;
  for (const auto& p : permissions) pool.push_back(p);

  // String pool, UTF-16.
  std::vector<std::uint8_t> data;
  std::vector<std::uint32_t> offsets;
  for (const auto& s : pool) {
    offsets.push_back(static_cast<std::uint32_t>(data.size()));
    put16(data, static_cast<std::uint16_t>(s.size()));
    for (const char ch : s) put16(data, static_cast<std::uint8_t>(ch));
    put16(data, 0);
  }
  while (data.size() % 4 != 0) data.push_back(0);
  const std::uint32_t pool_header = 0x1C;
  const std::uint32_t strings_start = pool_header + 4 * static_cast<std::uint32_t>(pool.size());

  std::vector<std::uint8_t> out;
  put16(out, kResXmlType);
  put16(out, 8);
  put32(out, 0);  // patched

  put16(out, kResStringPoolType);
  put16(out, pool_header);
  put32(out, strings_start + static_cast<std::uint32_t>(data.size()));
  put32(out, static_cast<std::uint32_t>(pool.size()));
  put32(out, 0);  // styles
  put32(out, 0);  // flags: UTF-16
  put32(out, strings_start);
  put32(out, 0);
  for (const auto o : offsets) put32(out, o);
  out.insert(out.end(), data.begin(), data.end());

  auto node_header = [&](std::uint16_t type, std::uint32_t size, std::uint32_t line) {
    put16(out, type);
    put16(out, 0x10);
    put32(out, size);
    put32(out, line);
    put32(out, kNoIndex);  // comment
  };
  auto start_element = [&](std::uint32_t name, std::uint32_t line, std::uint32_t attr_ns,
                           std::uint32_t attr_name, std::uint32_t attr_value) {
    node_header(kResXmlStartElementType, 0x10 + 0x14 + 0x14, line);
    put32(out, kNoIndex);
    put32(out, name);
    put16(out, 0x14);  // attributeStart
    put16(out, 0x14);  // attributeSize
    put16(out, 1);     // attributeCount
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put32(out, attr_ns);
    put32(out, attr_name);
    put32(out, attr_value);
    put16(out, 8);
    out.push_back(0);
    out.push_back(0x03);  // TYPE_STRING
    put32(out, attr_value);
  };
  auto end_element = [&](std::uint32_t name, std::uint32_t line) {
    node_header(kResXmlEndElementType, 0x18, line);
    put32(out, kNoIndex);
    put32(out, name);
  };

  node_header(kResXmlStartNamespaceType, 0x18, 1);
  put32(out, kPrefix);
  put32(out, kUri);
  start_element(kManifest, 1, kNoIndex, kPackage, kPkgValue);
  for (std::uint32_t i = 0; i < permissions.size(); ++i) {
    const std::uint32_t value = 7 + i;
    start_element(kUses, 2 + i, kUri, kName, value);
    end_element(kUses, 2 + i);
  }
  end_element(kManifest, 2 + static_cast<std::uint32_t>(permissions.size()));
  node_header(kResXmlEndNamespaceType, 0x18, 2 + static_cast<std::uint32_t>(permissions.size()));
  put32(out, kPrefix);
  put32(out, kUri);

  patch32(out, 4, static_cast<std::uint32_t>(out.size()));
  return out;
}

}  // namespace dexdedup
