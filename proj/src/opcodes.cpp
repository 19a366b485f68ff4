#include "dexdedup/opcodes.hpp"

#include <array>
#include <string>
#include <unordered_map>

namespace dexdedup {
namespace {

struct OpcodeInfo {
  std::string_view name;
  std::uint8_t width;  // code units
};

// Dalvik instruction set as shipped with the odex-era VM: official mnemonics,
// quick/inline forms at 0xEE..0xFB, everything else in 0xE3..0xFF unused.
// Unused slots decode as format 10x (one code unit).
constexpr std::array<OpcodeInfo, 256> kOpcodes = {{
    {"nop", 1}, {"move", 1}, {"move/from16", 2}, {"move/16", 3},
    {"move-wide", 1}, {"move-wide/from16", 2}, {"move-wide/16", 3}, {"move-object", 1},
    {"move-object/from16", 2}, {"move-object/16", 3}, {"move-result", 1}, {"move-result-wide", 1},
    {"move-result-object", 1}, {"move-exception", 1}, {"return-void", 1}, {"return", 1},
    // 0x10
    {"return-wide", 1}, {"return-object", 1}, {"const/4", 1}, {"const/16", 2},
    {"const", 3}, {"const/high16", 2}, {"const-wide/16", 2}, {"const-wide/32", 3},
    {"const-wide", 5}, {"const-wide/high16", 2}, {"const-string", 2}, {"const-string/jumbo", 3},
    {"const-class", 2}, {"monitor-enter", 1}, {"monitor-exit", 1}, {"check-cast", 2},
    // 0x20
    {"instance-of", 2}, {"array-length", 1}, {"new-instance", 2}, {"new-array", 2},
    {"filled-new-array", 3}, {"filled-new-array/range", 3}, {"fill-array-data", 3}, {"throw", 1},
    {"goto", 1}, {"goto/16", 2}, {"goto/32", 3}, {"packed-switch", 3},
    {"sparse-switch", 3}, {"cmpl-float", 2}, {"cmpg-float", 2}, {"cmpl-double", 2},
    // 0x30
    {"cmpg-double", 2}, {"cmp-long", 2}, {"if-eq", 2}, {"if-ne", 2},
    {"if-lt", 2}, {"if-ge", 2}, {"if-gt", 2}, {"if-le", 2},
    {"if-eqz", 2}, {"if-nez", 2}, {"if-ltz", 2}, {"if-gez", 2},
    {"if-gtz", 2}, {"if-lez", 2}, {"unused_3E", 1}, {"unused_3F", 1},
    // 0x40
    {"unused_40", 1}, {"unused_41", 1}, {"unused_42", 1}, {"unused_43", 1},
    {"aget", 2}, {"aget-wide", 2}, {"aget-object", 2}, {"aget-boolean", 2},
    {"aget-byte", 2}, {"aget-char", 2}, {"aget-short", 2}, {"aput", 2},
    {"aput-wide", 2}, {"aput-object", 2}, {"aput-boolean", 2}, {"aput-byte", 2},
    // 0x50
    {"aput-char", 2}, {"aput-short", 2}, {"iget", 2}, {"iget-wide", 2},
    {"iget-object", 2}, {"iget-boolean", 2}, {"iget-byte", 2}, {"iget-char", 2},
    {"iget-short", 2}, {"iput", 2}, {"iput-wide", 2}, {"iput-object", 2},
    {"iput-boolean", 2}, {"iput-byte", 2}, {"iput-char", 2}, {"iput-short", 2},
    // 0x60
    {"sget", 2}, {"sget-wide", 2}, {"sget-object", 2}, {"sget-boolean", 2},
    {"sget-byte", 2}, {"sget-char", 2}, {"sget-short", 2}, {"sput", 2},
    {"sput-wide", 2}, {"sput-object", 2}, {"sput-boolean", 2}, {"sput-byte", 2},
    {"sput-char", 2}, {"sput-short", 2}, {"invoke-virtual", 3}, {"invoke-super", 3},
    // 0x70
    {"invoke-direct", 3}, {"invoke-static", 3}, {"invoke-interface", 3}, {"unused_73", 1},
    {"invoke-virtual/range", 3}, {"invoke-super/range", 3}, {"invoke-direct/range", 3},
    {"invoke-static/range", 3}, {"invoke-interface/range", 3}, {"unused_79", 1},
    {"unused_7A", 1}, {"neg-int", 1}, {"not-int", 1}, {"neg-long", 1}, {"not-long", 1},
    {"neg-float", 1},
    // 0x80
    {"neg-double", 1}, {"int-to-long", 1}, {"int-to-float", 1}, {"int-to-double", 1},
    {"long-to-int", 1}, {"long-to-float", 1}, {"long-to-double", 1}, {"float-to-int", 1},
    {"float-to-long", 1}, {"float-to-double", 1}, {"double-to-int", 1}, {"double-to-long", 1},
    {"double-to-float", 1}, {"int-to-byte", 1}, {"int-to-char", 1}, {"int-to-short", 1},
    // 0x90
    {"add-int", 2}, {"sub-int", 2}, {"mul-int", 2}, {"div-int", 2},
    {"rem-int", 2}, {"and-int", 2}, {"or-int", 2}, {"xor-int", 2},
    {"shl-int", 2}, {"shr-int", 2}, {"ushr-int", 2}, {"add-long", 2},
    {"sub-long", 2}, {"mul-long", 2}, {"div-long", 2}, {"rem-long", 2},
    // 0xA0
    {"and-long", 2}, {"or-long", 2}, {"xor-long", 2}, {"shl-long", 2},
    {"shr-long", 2}, {"ushr-long", 2}, {"add-float", 2}, {"sub-float", 2},
    {"mul-float", 2}, {"div-float", 2}, {"rem-float", 2}, {"add-double", 2},
    {"sub-double", 2}, {"mul-double", 2}, {"div-double", 2}, {"rem-double", 2},
    // 0xB0
    {"add-int/2addr", 1}, {"sub-int/2addr", 1}, {"mul-int/2addr", 1}, {"div-int/2addr", 1},
    {"rem-int/2addr", 1}, {"and-int/2addr", 1}, {"or-int/2addr", 1}, {"xor-int/2addr", 1},
    {"shl-int/2addr", 1}, {"shr-int/2addr", 1}, {"ushr-int/2addr", 1}, {"add-long/2addr", 1},
    {"sub-long/2addr", 1}, {"mul-long/2addr", 1}, {"div-long/2addr", 1}, {"rem-long/2addr", 1},
    // 0xC0
    {"and-long/2addr", 1}, {"or-long/2addr", 1}, {"xor-long/2addr", 1}, {"shl-long/2addr", 1},
    {"shr-long/2addr", 1}, {"ushr-long/2addr", 1}, {"add-float/2addr", 1}, {"sub-float/2addr", 1},
    {"mul-float/2addr", 1}, {"div-float/2addr", 1}, {"rem-float/2addr", 1}, {"add-double/2addr", 1},
    {"sub-double/2addr", 1}, {"mul-double/2addr", 1}, {"div-double/2addr", 1}, {"rem-double/2addr", 1},
    // 0xD0
    {"add-int/lit16", 2}, {"rsub-int", 2}, {"mul-int/lit16", 2}, {"div-int/lit16", 2},
    {"rem-int/lit16", 2}, {"and-int/lit16", 2}, {"or-int/lit16", 2}, {"xor-int/lit16", 2},
    {"add-int/lit8", 2}, {"rsub-int/lit8", 2}, {"mul-int/lit8", 2}, {"div-int/lit8", 2},
    {"rem-int/lit8", 2}, {"and-int/lit8", 2}, {"or-int/lit8", 2}, {"xor-int/lit8", 2},
    // 0xE0
    {"shl-int/lit8", 2}, {"shr-int/lit8", 2}, {"ushr-int/lit8", 2}, {"unused_E3", 1},
    {"unused_E4", 1}, {"unused_E5", 1}, {"unused_E6", 1}, {"unused_E7", 1},
    {"unused_E8", 1}, {"unused_E9", 1}, {"unused_EA", 1}, {"unused_EB", 1},
    {"unused_EC", 1}, {"unused_ED", 1}, {"execute-inline", 3}, {"unused_EF", 1},
    // 0xF0
    {"invoke-direct-empty", 3}, {"unused_F1", 1}, {"iget-quick", 2}, {"iget-wide-quick", 2},
    {"iget-object-quick", 2}, {"iput-quick", 2}, {"iput-wide-quick", 2}, {"iput-object-quick", 2},
    {"invoke-virtual-quick", 3}, {"invoke-virtual-quick/range", 3}, {"invoke-super-quick", 3},
    {"invoke-super-quick/range", 3}, {"unused_FC", 1}, {"unused_FD", 1}, {"unused_FE", 1},
    {"unused_FF", 1},
}};

// 0xFA..0xFF in DEX 038+: invoke-polymorphic (45cc), invoke-polymorphic/range
// (4rcc), invoke-custom (35c), invoke-custom/range (3rc), const-method-handle
// and const-method-type (21c).
constexpr std::array<std::uint8_t, 6> kModernTailWidths = {4, 4, 3, 3, 2, 2};

constexpr std::array<MnemonicAlias, 9> kAliases = {{
    {"move/from 16", "move/from16"},
    {"const-wide/high 16", "const-wide/high16"},
    {"const-string-jumbo", "const-string/jumbo"},
    {"filled-new-array-range", "filled-new-array/range"},
    {"invoke-interface-range", "invoke-interface/range"},
    {"83 int-to-double", "int-to-double"},
    {"mul-int/2addr e", "mul-int/2addr"},
    {"sub-int/lit8", "rsub-int/lit8"},
    {"sub-int/lit16", "rsub-int"},
}};

constexpr std::array<OpcodeTableCorrection, 8> kCorrections = {{
    {0x04, "move-wide/from", "move-wide"},
    {0x05, "move-wide/16", "move-wide/from16"},
    {0x06, "", "move-wide/16"},
    {0x15, "const", "const/high16"},
    {0xD1, "add-int/lit16", "rsub-int"},
    {0xD2, "sub-int/lit16", "mul-int/lit16"},
    {0xD3, "mul-int/lit16", "div-int/lit16"},
    {0xD4, "div-int/lit16", "rem-int/lit16"},
}};

bool is_unused_name(std::string_view name) { return name.starts_with("unused_"); }

const std::unordered_map<std::string, std::uint8_t>& mnemonic_index() {
  static const auto index = [] {
    std::unordered_map<std::string, std::uint8_t> m;
    for (std::size_t v = 0; v < kOpcodes.size(); ++v) {
      m.emplace(std::string(kOpcodes[v].name), static_cast<std::uint8_t>(v));
    }
    for (const auto& alias : kAliases) {
      m.emplace(std::string(alias.printed), m.at(std::string(alias.canonical)));
    }
    return m;
  }();
  return index;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

Opcode decode_opcode(std::uint8_t byte) {
  const auto& info = kOpcodes[byte];
  return Opcode{byte, info.name, is_unused_name(info.name)};
}

std::optional<std::uint8_t> opcode_for_mnemonic(std::string_view mnemonic) {
  mnemonic = trim(mnemonic);
  const auto& index = mnemonic_index();
  if (auto it = index.find(std::string(mnemonic)); it != index.end()) return it->second;
  // unused_xx in lower-case hex
  if (mnemonic.size() == 9 && mnemonic.starts_with("unused_")) {
    std::string upper(mnemonic);
    for (std::size_t i = 7; i < upper.size(); ++i) {
      if (upper[i] >= 'a' && upper[i] <= 'f') upper[i] = static_cast<char>(upper[i] - 'a' + 'A');
    }
    if (auto it = index.find(upper); it != index.end()) return it->second;
  }
  return std::nullopt;
}

unsigned instruction_width(std::uint8_t opcode, unsigned dex_version) {
  if (dex_version >= 38 && opcode >= 0xFA) return kModernTailWidths[opcode - 0xFA];
  return kOpcodes[opcode].width;
}

std::span<const MnemonicAlias> mnemonic_aliases() { return kAliases; }

std::span<const OpcodeTableCorrection> opcode_table_corrections() { return kCorrections; }

}  // namespace dexdedup
