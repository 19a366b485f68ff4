#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dexdedup {

// Opcode bytes of one method body, in bytecode stream order. Never empty.
struct OpcodeSequence {
  std::string method_id;
  std::vector<std::uint8_t> opcodes;

  bool operator==(const OpcodeSequence&) const = default;
};

struct ExtractionReport {
  std::string app_id;
  std::size_t method_count = 0;     // == number of emitted sequences
  std::size_t skipped_methods = 0;  // methods dropped because they failed to parse
  std::size_t filtered_methods = 0; // methods shorter than ExtractOptions::min_length
  std::vector<std::string> parse_warnings;
};

struct Extraction {
  std::vector<OpcodeSequence> sequences;
  ExtractionReport report;
};

struct ExtractOptions {
  // Sequences with fewer opcodes are dropped (counted in filtered_methods).
  std::size_t min_length = 1;
};

enum class InputFormat { kAuto, kDex, kApk, kSmali };

InputFormat parse_input_format(std::string_view name);

// One sequence per method with a non-empty code item. Throws MalformedDex for
// header/id-table damage; per-method failures become parse warnings.
Extraction extract_from_dex(std::span<const std::uint8_t> bytes, std::string app_id = {},
                            const ExtractOptions& options = {});

// Smali source of one class. Throws UnknownMnemonic or MalformedSmali.
// `source` names the input in diagnostics.
std::vector<OpcodeSequence> extract_from_smali(std::string_view text, std::string_view source = {});

// Every *.smali file below `root`, visited in lexicographic path order.
// A single .smali file is also accepted.
Extraction extract_from_smali_tree(const std::filesystem::path& root, std::string app_id = {},
                                   const ExtractOptions& options = {});

// Concatenation over every root-level `classes*.dex` member in lexicographic
// name order. Throws NoDexEntries; damaged members become parse warnings.
Extraction extract_from_apk(std::span<const std::uint8_t> bytes, std::string app_id = {},
                            const ExtractOptions& options = {});

// Reads `path` and dispatches on `format` (kAuto: directory => smali,
// otherwise by magic bytes).
Extraction extract_app(const std::filesystem::path& path, InputFormat format, std::string app_id,
                       const ExtractOptions& options = {});

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace dexdedup
