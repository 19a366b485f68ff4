#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace dexdedup {

// One Dalvik opcode byte. The map is total over 0x00..0xFF; slots the
// instruction set leaves empty carry an `unused_XX` mnemonic.
struct Opcode {
  std::uint8_t value = 0;
  std::string_view mnemonic;
  bool unused = false;
};

Opcode decode_opcode(std::uint8_t byte);

// Resolves a mnemonic (canonical name, a known spelling variant from the published table, or
// `unused_XX`) to its opcode value. Matching is exact after trimming.
std::optional<std::uint8_t> opcode_for_mnemonic(std::string_view mnemonic);

// Width in 16-bit code units of an instruction whose first unit carries
// `opcode`. `dex_version` is the numeric version from the DEX magic (35, 37,
// 38, 39, ...). From version 38 on, 0xFA..0xFF are the invoke-polymorphic /
// invoke-custom / const-method-* family and their widths follow that format;
// before that they are the odex quick forms.
unsigned instruction_width(std::uint8_t opcode, unsigned dex_version = 35);

// Spelling variants printed in the published opcode table that do not match
// the official Dalvik mnemonic. Resolved by opcode_for_mnemonic().
struct MnemonicAlias {
  std::string_view printed;
  std::string_view canonical;
};
std::span<const MnemonicAlias> mnemonic_aliases();

// Cells of the published opcode table whose name belongs to a different
// value (duplicated or shifted rows) or that are absent from it. `printed`
// is empty for an absent cell.
struct OpcodeTableCorrection {
  std::uint8_t value;
  std::string_view printed;
  std::string_view canonical;
};
std::span<const OpcodeTableCorrection> opcode_table_corrections();

}  // namespace dexdedup
