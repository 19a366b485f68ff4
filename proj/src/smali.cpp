#include <string>
#include <string_view>

#include "dexdedup/error.hpp"
#include "dexdedup/extract.hpp"
#include "dexdedup/opcodes.hpp"

namespace dexdedup {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view first_token(std::string_view line) {
  const auto end = line.find_first_of(" \t");
  return end == std::string_view::npos ? line : line.substr(0, end);
}

std::string_view last_token(std::string_view line) {
  const auto pos = line.find_last_of(" \t");
  return pos == std::string_view::npos ? line : line.substr(pos + 1);
}

// Directives that open a block whose body is data, not instructions.
std::string_view block_end_for(std::string_view directive) {
  if (directive == ".annotation") return ".end annotation";
  if (directive == ".subannotation") return ".end subannotation";
  if (directive == ".packed-switch") return ".end packed-switch";
  if (directive == ".sparse-switch") return ".end sparse-switch";
  if (directive == ".array-data") return ".end array-data";
  return {};
}

}  // namespace

std::vector<OpcodeSequence> extract_from_smali(std::string_view text, std::string_view source) {
  const std::string where = source.empty() ? std::string("<smali>") : std::string(source);
  auto fail = [&](ErrorCode code, std::size_t line_no, const std::string& msg) {
    throw Error(code, where + ":" + std::to_string(line_no) + ": " + msg);
  };

  std::vector<OpcodeSequence> out;
  std::string class_descriptor;
  bool in_method = false;
  std::size_t method_line = 0;
  OpcodeSequence current;
  // Nested data blocks (annotations may contain subannotations).
  std::vector<std::string_view> open_blocks;
  std::size_t block_line = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto head = first_token(line);

    if (!open_blocks.empty()) {
      if (line == open_blocks.back()) {
        open_blocks.pop_back();
      } else if (auto end = block_end_for(head); !end.empty()) {
        open_blocks.push_back(end);
      }
      continue;
    }
    if (auto end = block_end_for(head); !end.empty()) {
      open_blocks.push_back(end);
      block_line = line_no;
      continue;
    }

    if (head == ".class") {
      class_descriptor = std::string(last_token(line));
      continue;
    }
    if (head == ".method") {
      if (in_method) fail(ErrorCode::kMalformedSmali, line_no, ".method inside method opened at line " + std::to_string(method_line));
      in_method = true;
      method_line = line_no;
      const auto signature = last_token(line);
      current = OpcodeSequence{};
      current.method_id = class_descriptor.empty() ? where + "->" + std::string(signature)
                                                   : class_descriptor + "->" + std::string(signature);
      continue;
    }
    if (line == ".end method") {
      if (!in_method) fail(ErrorCode::kMalformedSmali, line_no, ".end method without .method");
      in_method = false;
      if (!current.opcodes.empty()) out.push_back(std::move(current));
      continue;
    }
    if (head.front() == '.' || head.front() == ':') continue;  // other directives, labels
    if (!in_method) continue;

    const auto value = opcode_for_mnemonic(head);
    if (!value) fail(ErrorCode::kUnknownMnemonic, line_no, "unknown mnemonic '" + std::string(head) + "'");
    current.opcodes.push_back(*value);
  }

  if (!open_blocks.empty()) {
    fail(ErrorCode::kMalformedSmali, block_line, "unterminated block, expected '" + std::string(open_blocks.back()) + "'");
  }
  if (in_method) fail(ErrorCode::kMalformedSmali, method_line, ".method without .end method");
  return out;
}

}  // namespace dexdedup
