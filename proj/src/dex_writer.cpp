#include "dexdedup/dex_writer.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <tuple>

#include <openssl/evp.h>
#include <zlib.h>

#include "dexdedup/error.hpp"
#include "dexdedup/opcodes.hpp"

namespace dexdedup {
namespace {

constexpr std::uint32_t kHeaderSize = 0x70;
constexpr std::uint32_t kAccPublicStatic = 0x0009;
constexpr char kObject[] = "Ljava/lang/Object;";

class Buffer {
 public:
  std::vector<std::uint8_t> bytes;

  std::uint32_t pos() const { return static_cast<std::uint32_t>(bytes.size()); }
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void uleb(std::uint32_t v) {
    do {
      std::uint8_t b = v & 0x7F;
      v >>= 7;
      if (v) b |= 0x80;
      u8(b);
    } while (v);
  }
  void align4() {
    while (bytes.size() % 4) u8(0);
  }
  void put32(std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
};

struct MethodKey {
  std::uint32_t type, name;
  bool operator<(const MethodKey& o) const { return std::tie(type, name) < std::tie(o.type, o.name); }
};

}  // namespace

std::vector<std::uint16_t> encode_instructions(std::span<const std::uint8_t> opcodes) {
  std::vector<std::uint16_t> units;
  for (const std::uint8_t op : opcodes) {
    const unsigned width = instruction_width(op);
    units.push_back(op);
    for (unsigned i = 1; i < width; ++i) units.push_back(0);
  }
  return units;
}

std::vector<std::uint8_t> write_dex(std::span<const DexClassSpec> classes, std::span<const DexMethodRef> refs) {
  // Collect and sort the string pool (plain ASCII, so byte order is MUTF-8 order).
  std::set<std::string> string_set{"V", kObject};
  std::set<std::string> type_set{"V", kObject};
  for (const auto& c : classes) {
    string_set.insert(c.descriptor);
    type_set.insert(c.descriptor);
    for (const auto& m : c.methods) {
      if (m.opcodes.empty()) throw Error(ErrorCode::kInvalidInput, c.descriptor + "->" + m.name + " has no body");
      string_set.insert(m.name);
    }
  }
  for (const auto& r : refs) {
    string_set.insert(r.class_descriptor);
    type_set.insert(r.class_descriptor);
    string_set.insert(r.name);
  }
  const std::vector<std::string> strings(string_set.begin(), string_set.end());
  auto string_idx = [&](const std::string& s) {
    return static_cast<std::uint32_t>(std::lower_bound(strings.begin(), strings.end(), s) - strings.begin());
  };
  // type_ids sorted by string index == sorted by descriptor.
  const std::vector<std::string> types(type_set.begin(), type_set.end());
  auto type_idx = [&](const std::string& s) {
    return static_cast<std::uint32_t>(std::lower_bound(types.begin(), types.end(), s) - types.begin());
  };

  std::map<MethodKey, const DexMethodSpec*> methods;
  for (const auto& c : classes) {
    for (const auto& m : c.methods) {
      if (!methods.emplace(MethodKey{type_idx(c.descriptor), string_idx(m.name)}, &m).second) {
        throw Error(ErrorCode::kInvalidInput, "duplicate method " + c.descriptor + "->" + m.name);
      }
    }
  }
  for (const auto& r : refs) methods.emplace(MethodKey{type_idx(r.class_descriptor), string_idx(r.name)}, nullptr);
  std::map<MethodKey, std::uint32_t> method_idx;
  for (const auto& [k, _] : methods) method_idx.emplace(k, static_cast<std::uint32_t>(method_idx.size()));

  const auto n_strings = static_cast<std::uint32_t>(strings.size());
  const auto n_types = static_cast<std::uint32_t>(types.size());
  const auto n_methods = static_cast<std::uint32_t>(methods.size());
  const auto n_classes = static_cast<std::uint32_t>(classes.size());
  const std::uint32_t string_ids_off = kHeaderSize;
  const std::uint32_t type_ids_off = string_ids_off + 4 * n_strings;
  const std::uint32_t proto_ids_off = type_ids_off + 4 * n_types;
  const std::uint32_t method_ids_off = proto_ids_off + 12;
  const std::uint32_t class_defs_off = method_ids_off + 8 * n_methods;
  const std::uint32_t data_off = class_defs_off + 32 * n_classes;

  Buffer out;
  out.bytes.resize(data_off, 0);

  // Code items.
  std::map<const DexMethodSpec*, std::uint32_t> code_off;
  std::uint32_t code_items = 0;
  for (const auto& [key, spec] : methods) {
    if (spec == nullptr) continue;
    out.align4();
    code_off[spec] = out.pos();
    ++code_items;
    const auto units = encode_instructions(spec->opcodes);
    out.u16(16);  // registers
    out.u16(0);   // ins
    out.u16(5);   // outs
    out.u16(0);   // tries
    out.u32(0);   // debug info
    out.u32(static_cast<std::uint32_t>(units.size()));
    for (const auto u : units) out.u16(u);
  }
  std::uint32_t first_code = ~0u;
  for (const auto& [_, off] : code_off) first_code = std::min(first_code, off);

  // String data.
  std::vector<std::uint32_t> string_data_off;
  const std::uint32_t string_data_start = out.pos();
  for (const auto& s : strings) {
    string_data_off.push_back(out.pos());
    out.uleb(static_cast<std::uint32_t>(s.size()));
    out.bytes.insert(out.bytes.end(), s.begin(), s.end());
    out.u8(0);
  }

  // Class data.
  std::vector<std::uint32_t> class_data_off;
  const std::uint32_t class_data_start = out.pos();
  for (const auto& c : classes) {
    class_data_off.push_back(out.pos());
    std::vector<std::pair<std::uint32_t, const DexMethodSpec*>> direct;
    for (const auto& m : c.methods) {
      direct.emplace_back(method_idx.at(MethodKey{type_idx(c.descriptor), string_idx(m.name)}), &m);
    }
    std::sort(direct.begin(), direct.end());
    out.uleb(0);
    out.uleb(0);
    out.uleb(static_cast<std::uint32_t>(direct.size()));
    out.uleb(0);
    std::uint32_t prev = 0;
    for (const auto& [idx, spec] : direct) {
      out.uleb(idx - prev);
      prev = idx;
      out.uleb(kAccPublicStatic);
      out.uleb(code_off.at(spec));
    }
  }

  out.align4();
  const std::uint32_t map_off = out.pos();
  struct MapItem {
    std::uint16_t type;
    std::uint32_t size, offset;
  };
  std::vector<MapItem> map{{0x0000, 1, 0},
                           {0x0001, n_strings, string_ids_off},
                           {0x0002, n_types, type_ids_off},
                           {0x0003, 1, proto_ids_off},
                           {0x0005, n_methods, method_ids_off}};
  if (n_classes) map.push_back({0x0006, n_classes, class_defs_off});
  if (code_items) map.push_back({0x2001, code_items, first_code});
  map.push_back({0x2002, n_strings, string_data_start});
  if (n_classes) map.push_back({0x2000, n_classes, class_data_start});
  map.push_back({0x1000, 1, map_off});
  out.u32(static_cast<std::uint32_t>(map.size()));
  for (const auto& item : map) {
    out.u16(item.type);
    out.u16(0);
    out.u32(item.size);
    out.u32(item.offset);
  }

  // Id tables.
  for (std::uint32_t i = 0; i < n_strings; ++i) out.put32(string_ids_off + 4 * i, string_data_off[i]);
  for (std::uint32_t i = 0; i < n_types; ++i) out.put32(type_ids_off + 4 * i, string_idx(types[i]));
  out.put32(proto_ids_off, string_idx("V"));
  out.put32(proto_ids_off + 4, type_idx("V"));
  out.put32(proto_ids_off + 8, 0);
  for (const auto& [key, idx] : method_idx) {
    const std::uint32_t at = method_ids_off + 8 * idx;
    out.bytes[at] = static_cast<std::uint8_t>(key.type);
    out.bytes[at + 1] = static_cast<std::uint8_t>(key.type >> 8);
    out.bytes[at + 2] = 0;  // proto 0
    out.bytes[at + 3] = 0;
    out.put32(at + 4, key.name);
  }
  for (std::uint32_t i = 0; i < n_classes; ++i) {
    const std::uint32_t at = class_defs_off + 32 * i;
    out.put32(at, type_idx(classes[i].descriptor));
    out.put32(at + 4, 0x0001);  // public
    out.put32(at + 8, type_idx(kObject));
    out.put32(at + 12, 0);            // interfaces
    out.put32(at + 16, 0xFFFFFFFF);   // no source file
    out.put32(at + 20, 0);            // annotations
    out.put32(at + 24, class_data_off[i]);
    out.put32(at + 28, 0);            // static values
  }

  // Header.
  const char magic[8] = {'d', 'e', 'x', '\n', '0', '3', '5', '\0'};
  std::memcpy(out.bytes.data(), magic, 8);
  const auto file_size = out.pos();
  out.put32(0x20, file_size);
  out.put32(0x24, kHeaderSize);
  out.put32(0x28, 0x12345678);
  out.put32(0x34, map_off);
  out.put32(0x38, n_strings);
  out.put32(0x3C, string_ids_off);
  out.put32(0x40, n_types);
  out.put32(0x44, type_ids_off);
  out.put32(0x48, 1);
  out.put32(0x4C, proto_ids_off);
  out.put32(0x58, n_methods);
  out.put32(0x5C, method_ids_off);
  out.put32(0x60, n_classes);
  out.put32(0x64, n_classes ? class_defs_off : 0);
  out.put32(0x68, file_size - data_off);
  out.put32(0x6C, data_off);

  unsigned int sha_len = 0;
  if (EVP_Digest(out.bytes.data() + 32, file_size - 32, out.bytes.data() + 12, &sha_len, EVP_sha1(), nullptr) != 1 ||
      sha_len != 20) {
    throw Error(ErrorCode::kIo, "SHA-1 of DEX image failed");
  }
  const auto adler = adler32(adler32(0L, Z_NULL, 0), out.bytes.data() + 12, file_size - 12);
  out.put32(0x08, static_cast<std::uint32_t>(adler));
  return out.bytes;
}

}  // namespace dexdedup
