#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dexdedup {

struct DexMethodSpec {
  std::string name;
  std::vector<std::uint8_t> opcodes;  // one instruction per byte, operands zeroed
};

struct DexClassSpec {
  std::string descriptor;  // e.g. "Lcom/example/Main;"
  std::vector<DexMethodSpec> methods;
};

// A method id with no body, e.g. a framework API the app calls.
struct DexMethodRef {
  std::string class_descriptor;
  std::string name;
};

// Code units for `opcodes`: each opcode byte followed by zero operand bits,
// padded to its format width. A zeroed nop never reads as a payload header.
std::vector<std::uint16_t> encode_instructions(std::span<const std::uint8_t> opcodes);

// A version 035 DEX image. Every method is public static "()V" with a code
// item; classes extend java.lang.Object. Checksum and SHA-1 signature are
// filled in. Throws InvalidInput for an empty method body or duplicate names.
std::vector<std::uint8_t> write_dex(std::span<const DexClassSpec> classes, std::span<const DexMethodRef> refs = {});

}  // namespace dexdedup
