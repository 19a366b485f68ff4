#include "dexdedup/dex_file.hpp"

#include <sstream>

#include "dexdedup/error.hpp"
#include "dexdedup/opcodes.hpp"

namespace dexdedup {
namespace {

constexpr std::uint32_t kEndianConstant = 0x12345678;
constexpr std::size_t kStringIdSize = 4;
constexpr std::size_t kTypeIdSize = 4;
constexpr std::size_t kProtoIdSize = 12;
constexpr std::size_t kMethodIdSize = 8;
constexpr std::size_t kClassDefSize = 32;
constexpr std::size_t kCodeItemHeaderSize = 16;

constexpr std::uint16_t kPackedSwitchPayload = 0x0100;
constexpr std::uint16_t kSparseSwitchPayload = 0x0200;
constexpr std::uint16_t kFillArrayDataPayload = 0x0300;

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

[[noreturn]] void malformed(const std::string& what, std::uint64_t offset) {
  throw Error(ErrorCode::kMalformedDex, what + " at offset " + hex(offset));
}

}  // namespace

bool has_dex_magic(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) return false;
  auto digit = [](std::uint8_t c) { return c >= '0' && c <= '9'; };
  return bytes[0] == 'd' && bytes[1] == 'e' && bytes[2] == 'x' && bytes[3] == '\n' &&
         digit(bytes[4]) && digit(bytes[5]) && digit(bytes[6]) && bytes[7] == 0;
}

DexFile::DexFile(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  if (!has_dex_magic(bytes)) malformed("bad DEX magic", 0);
  if (bytes.size() < kHeaderSize) {
    malformed("truncated header (" + std::to_string(bytes.size()) + " bytes)", bytes.size());
  }
  version_ = static_cast<unsigned>((bytes[4] - '0') * 100 + (bytes[5] - '0') * 10 + (bytes[6] - '0'));
  if (u32(0x28) != kEndianConstant) malformed("unsupported endian tag " + hex(u32(0x28)), 0x28);

  string_ids_size_ = u32(0x38);
  string_ids_off_ = u32(0x3C);
  type_ids_size_ = u32(0x40);
  type_ids_off_ = u32(0x44);
  proto_ids_size_ = u32(0x48);
  proto_ids_off_ = u32(0x4C);
  method_ids_size_ = u32(0x58);
  method_ids_off_ = u32(0x5C);
  class_defs_size_ = u32(0x60);
  class_defs_off_ = u32(0x64);

  check_table("string_ids", string_ids_size_, string_ids_off_, kStringIdSize);
  check_table("type_ids", type_ids_size_, type_ids_off_, kTypeIdSize);
  check_table("proto_ids", proto_ids_size_, proto_ids_off_, kProtoIdSize);
  check_table("method_ids", method_ids_size_, method_ids_off_, kMethodIdSize);
  check_table("class_defs", class_defs_size_, class_defs_off_, kClassDefSize);
}

void DexFile::check_table(const char* what, std::uint32_t size, std::uint32_t off,
                          std::size_t item_size) const {
  if (size == 0) return;
  const std::uint64_t end = std::uint64_t{off} + std::uint64_t{size} * item_size;
  if (end > bytes_.size()) {
    malformed(std::string(what) + " section (" + std::to_string(size) + " items) past end of file",
              off);
  }
}

std::uint16_t DexFile::u16(std::size_t off) const {
  if (off + 2 > bytes_.size()) malformed("read past end of file", off);
  return static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8));
}

std::uint32_t DexFile::u32(std::size_t off) const {
  if (off + 4 > bytes_.size()) malformed("read past end of file", off);
  return std::uint32_t{bytes_[off]} | (std::uint32_t{bytes_[off + 1]} << 8) |
         (std::uint32_t{bytes_[off + 2]} << 16) | (std::uint32_t{bytes_[off + 3]} << 24);
}

std::uint32_t DexFile::uleb128(std::size_t& off) const {
  std::uint32_t result = 0;
  for (int i = 0; i < 5; ++i) {
    if (off >= bytes_.size()) malformed("uleb128 past end of file", off);
    const std::uint8_t b = bytes_[off++];
    result |= std::uint32_t{b & 0x7Fu} << (7 * i);
    if ((b & 0x80) == 0) return result;
  }
  malformed("uleb128 longer than 5 bytes", off);
}

std::string DexFile::string_at(std::uint32_t idx) const {
  if (idx >= string_ids_size_) malformed("string index " + std::to_string(idx) + " out of range", 0);
  std::size_t off = u32(string_ids_off_ + std::size_t{idx} * kStringIdSize);
  uleb128(off);  // utf16 length, unused
  std::string out;
  while (true) {
    if (off >= bytes_.size()) malformed("unterminated string data", off);
    const std::uint8_t c = bytes_[off++];
    if (c == 0) break;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string DexFile::type_descriptor(std::uint32_t type_idx) const {
  if (type_idx >= type_ids_size_) {
    malformed("type index " + std::to_string(type_idx) + " out of range", type_ids_off_);
  }
  return string_at(u32(type_ids_off_ + std::size_t{type_idx} * kTypeIdSize));
}

std::string DexFile::method_name(std::uint32_t idx) const {
  if (idx >= method_ids_size_) {
    malformed("method index " + std::to_string(idx) + " out of range", method_ids_off_);
  }
  return string_at(u32(method_ids_off_ + std::size_t{idx} * kMethodIdSize + 4));
}

std::string DexFile::method_reference(std::uint32_t idx) const {
  if (idx >= method_ids_size_) {
    malformed("method index " + std::to_string(idx) + " out of range", method_ids_off_);
  }
  const std::size_t base = method_ids_off_ + std::size_t{idx} * kMethodIdSize;
  const std::uint16_t class_idx = u16(base);
  const std::uint16_t proto_idx = u16(base + 2);
  const std::uint32_t name_idx = u32(base + 4);
  if (proto_idx >= proto_ids_size_) {
    malformed("proto index " + std::to_string(proto_idx) + " out of range", base + 2);
  }
  const std::size_t proto = proto_ids_off_ + std::size_t{proto_idx} * kProtoIdSize;
  const std::uint32_t return_type = u32(proto + 4);
  const std::uint32_t params_off = u32(proto + 8);

  std::string ref = type_descriptor(class_idx) + "->" + string_at(name_idx) + "(";
  if (params_off != 0) {
    const std::uint32_t count = u32(params_off);
    if (std::uint64_t{params_off} + 4 + std::uint64_t{count} * 2 > bytes_.size()) {
      malformed("type_list past end of file", params_off);
    }
    for (std::uint32_t i = 0; i < count; ++i) ref += type_descriptor(u16(params_off + 4 + i * 2));
  }
  ref += ")" + type_descriptor(return_type);
  return ref;
}

std::vector<DexFile::EncodedMethod> DexFile::class_methods(std::uint32_t class_def_idx) const {
  if (class_def_idx >= class_defs_size_) {
    malformed("class_def index " + std::to_string(class_def_idx) + " out of range", class_defs_off_);
  }
  const std::uint32_t data_off = u32(class_defs_off_ + std::size_t{class_def_idx} * kClassDefSize + 24);
  std::vector<EncodedMethod> methods;
  if (data_off == 0) return methods;  // marker interface / no members
  if (data_off >= bytes_.size()) malformed("class_data offset out of bounds", data_off);

  std::size_t off = data_off;
  const std::uint32_t static_fields = uleb128(off);
  const std::uint32_t instance_fields = uleb128(off);
  const std::uint32_t direct_methods = uleb128(off);
  const std::uint32_t virtual_methods = uleb128(off);
  // Each encoded member takes at least two (fields) or three (methods) bytes.
  const std::uint64_t min_bytes = (std::uint64_t{static_fields} + instance_fields) * 2 +
                                  (std::uint64_t{direct_methods} + virtual_methods) * 3;
  if (off + min_bytes > bytes_.size()) malformed("class_data member lists past end of file", off);

  for (std::uint64_t i = 0; i < std::uint64_t{static_fields} + instance_fields; ++i) {
    uleb128(off);
    uleb128(off);
  }
  methods.reserve(direct_methods + virtual_methods);
  for (const std::uint32_t count : {direct_methods, virtual_methods}) {
    std::uint32_t method_idx = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
      EncodedMethod m;
      method_idx += uleb128(off);
      m.method_idx = method_idx;
      m.access_flags = uleb128(off);
      m.code_off = uleb128(off);
      methods.push_back(m);
    }
  }
  return methods;
}

DexFile::CodeItem DexFile::code_item(std::uint32_t code_off) const {
  if (std::uint64_t{code_off} + kCodeItemHeaderSize > bytes_.size()) {
    throw Error(ErrorCode::kMethodParseError, "code_item header out of bounds at offset " + hex(code_off));
  }
  CodeItem item;
  item.registers_size = u16(code_off);
  item.ins_size = u16(code_off + 2);
  item.outs_size = u16(code_off + 4);
  item.tries_size = u16(code_off + 6);
  item.insns_size = u32(code_off + 12);
  const std::uint64_t begin = std::uint64_t{code_off} + kCodeItemHeaderSize;
  const std::uint64_t length = std::uint64_t{item.insns_size} * 2;
  if (begin + length > bytes_.size()) {
    throw Error(ErrorCode::kMethodParseError,
                "code_item at offset " + hex(code_off) + " declares " +
                    std::to_string(item.insns_size) + " code units past end of file");
  }
  item.insns = bytes_.subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(length));
  return item;
}

std::vector<std::uint8_t> walk_instructions(std::span<const std::uint8_t> insns,
                                            unsigned dex_version, std::size_t* unused_count) {
  const std::uint64_t units = insns.size() / 2;
  auto unit = [&](std::uint64_t i) -> std::uint16_t {
    return static_cast<std::uint16_t>(insns[2 * i] | (insns[2 * i + 1] << 8));
  };
  auto overrun = [&](std::uint64_t pc, std::uint64_t width) {
    throw Error(ErrorCode::kMethodParseError,
                "instruction at code unit " + std::to_string(pc) + " (width " +
                    std::to_string(width) + ") overruns method of " + std::to_string(units) +
                    " code units");
  };

  std::vector<std::uint8_t> ops;
  std::size_t unused = 0;
  std::uint64_t pc = 0;
  while (pc < units) {
    const std::uint16_t first = unit(pc);
    const std::uint8_t op = static_cast<std::uint8_t>(first & 0xFF);
    std::uint64_t width = 0;
    bool payload = true;
    switch (first) {
      case kPackedSwitchPayload:
        if (pc + 2 > units) overrun(pc, 2);
        width = 4 + std::uint64_t{unit(pc + 1)} * 2;
        break;
      case kSparseSwitchPayload:
        if (pc + 2 > units) overrun(pc, 2);
        width = 2 + std::uint64_t{unit(pc + 1)} * 4;
        break;
      case kFillArrayDataPayload: {
        if (pc + 4 > units) overrun(pc, 4);
        const std::uint64_t element_width = unit(pc + 1);
        const std::uint64_t count = std::uint64_t{unit(pc + 2)} | (std::uint64_t{unit(pc + 3)} << 16);
        width = 4 + (count * element_width + 1) / 2;
        break;
      }
      default:
        payload = false;
        width = instruction_width(op, dex_version);
        break;
    }
    if (pc + width > units) overrun(pc, width);
    if (!payload) {
      ops.push_back(op);
      if (decode_opcode(op).unused) ++unused;
    }
    pc += width;
  }
  if (unused_count != nullptr) *unused_count = unused;
  return ops;
}

}  // namespace dexdedup
