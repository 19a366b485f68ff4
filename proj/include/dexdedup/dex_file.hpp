#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dexdedup {

// Read-only view over a DEX image. The header and every id table are bounds
// checked on construction (MalformedDex); class data and code items are
// checked lazily so a single bad method can be skipped by the caller.
//
// The view does not own the bytes: the buffer must outlive the DexFile.
class DexFile {
 public:
  static constexpr std::size_t kHeaderSize = 0x70;

  struct EncodedMethod {
    std::uint32_t method_idx = 0;
    std::uint32_t access_flags = 0;
    std::uint32_t code_off = 0;
  };

  struct CodeItem {
    std::uint16_t registers_size = 0;
    std::uint16_t ins_size = 0;
    std::uint16_t outs_size = 0;
    std::uint16_t tries_size = 0;
    std::uint32_t insns_size = 0;  // in 16-bit code units
    std::span<const std::uint8_t> insns;  // insns_size * 2 bytes, little endian
  };

  explicit DexFile(std::span<const std::uint8_t> bytes);

  unsigned version() const { return version_; }
  std::uint32_t string_count() const { return string_ids_size_; }
  std::uint32_t type_count() const { return type_ids_size_; }
  std::uint32_t method_count() const { return method_ids_size_; }
  std::uint32_t class_def_count() const { return class_defs_size_; }

  std::string string_at(std::uint32_t idx) const;
  std::string type_descriptor(std::uint32_t type_idx) const;

  // Simple name of method id `idx`, e.g. "sendTextMessage".
  std::string method_name(std::uint32_t idx) const;
  // Smali-style reference, e.g. "Landroid/telephony/SmsManager;->sendTextMessage(...)V".
  std::string method_reference(std::uint32_t idx) const;

  // Direct then virtual methods of class_def `class_def_idx`, in file order.
  // Throws MalformedDex if the class data cannot be decoded.
  std::vector<EncodedMethod> class_methods(std::uint32_t class_def_idx) const;

  // Throws MethodParseError if the code item does not fit in the file.
  CodeItem code_item(std::uint32_t code_off) const;

 private:
  std::uint16_t u16(std::size_t off) const;
  std::uint32_t u32(std::size_t off) const;
  std::uint32_t uleb128(std::size_t& off) const;
  void check_table(const char* what, std::uint32_t size, std::uint32_t off,
                   std::size_t item_size) const;

  std::span<const std::uint8_t> bytes_;
  unsigned version_ = 0;
  std::uint32_t string_ids_size_ = 0, string_ids_off_ = 0;
  std::uint32_t type_ids_size_ = 0, type_ids_off_ = 0;
  std::uint32_t proto_ids_size_ = 0, proto_ids_off_ = 0;
  std::uint32_t method_ids_size_ = 0, method_ids_off_ = 0;
  std::uint32_t class_defs_size_ = 0, class_defs_off_ = 0;
};

// True when `bytes` starts with "dex\n" + three version digits + NUL.
bool has_dex_magic(std::span<const std::uint8_t> bytes);

// Walks a method's instruction stream and returns the leading opcode byte of
// every instruction, skipping switch and array-data payloads. Never reads past
// `insns` (which holds exactly the declared code units). Throws
// MethodParseError when an instruction or payload overruns the stream.
// `unused_count`, when given, receives the number of unused opcodes seen.
std::vector<std::uint8_t> walk_instructions(std::span<const std::uint8_t> insns,
                                            unsigned dex_version,
                                            std::size_t* unused_count = nullptr);

}  // namespace dexdedup
