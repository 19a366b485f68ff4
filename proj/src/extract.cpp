#include "dexdedup/extract.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <regex>

#include "dexdedup/dex_file.hpp"
#include "dexdedup/error.hpp"
#include "dexdedup/zip_archive.hpp"

namespace dexdedup {
namespace {

void append(Extraction& into, Extraction&& part, const std::string& prefix) {
  into.report.method_count += part.report.method_count;
  into.report.skipped_methods += part.report.skipped_methods;
  into.report.filtered_methods += part.report.filtered_methods;
  for (auto& w : part.report.parse_warnings) into.report.parse_warnings.push_back(prefix + w);
  std::move(part.sequences.begin(), part.sequences.end(), std::back_inserter(into.sequences));
}

bool is_dex_member(const std::string& name) {
  static const std::regex pattern("classes[0-9]*\\.dex");
  return std::regex_match(name, pattern);
}

}  // namespace

InputFormat parse_input_format(std::string_view name) {
  if (name == "auto") return InputFormat::kAuto;
  if (name == "dex") return InputFormat::kDex;
  if (name == "apk" || name == "zip") return InputFormat::kApk;
  if (name == "smali") return InputFormat::kSmali;
  throw Error(ErrorCode::kInvalidConfig, "unknown input format '" + std::string(name) + "'");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Extraction extract_from_dex(std::span<const std::uint8_t> bytes, std::string app_id,
                            const ExtractOptions& options) {
  const DexFile dex(bytes);
  Extraction out;
  out.report.app_id = std::move(app_id);
  auto& report = out.report;

  for (std::uint32_t c = 0; c < dex.class_def_count(); ++c) {
    std::vector<DexFile::EncodedMethod> methods;
    try {
      methods = dex.class_methods(c);
    } catch (const Error& e) {
      report.parse_warnings.push_back("class_def " + std::to_string(c) + ": " + e.what());
      continue;
    }
    for (const auto& m : methods) {
      if (m.code_off == 0) continue;  // abstract or native
      std::string id = "method@" + std::to_string(m.method_idx);
      std::vector<std::uint8_t> ops;
      std::size_t unused = 0;
      try {
        id = dex.method_reference(m.method_idx);
        ops = walk_instructions(dex.code_item(m.code_off).insns, dex.version(), &unused);
      } catch (const Error& e) {
        ++report.skipped_methods;
        report.parse_warnings.push_back(id + ": " + e.what());
        continue;
      }
      if (unused > 0) {
        report.parse_warnings.push_back(id + ": " + std::to_string(unused) + " unused opcode(s) in stream");
      }
      if (ops.empty()) continue;
      if (ops.size() < options.min_length) {
        ++report.filtered_methods;
        continue;
      }
      out.sequences.push_back({std::move(id), std::move(ops)});
    }
  }
  report.method_count = out.sequences.size();
  return out;
}

Extraction extract_from_apk(std::span<const std::uint8_t> bytes, std::string app_id,
                            const ExtractOptions& options) {
  const ZipArchive zip(bytes);
  std::vector<ZipEntry> members;
  for (const auto& e : zip.entries()) {
    if (is_dex_member(e.name)) members.push_back(e);
  }
  if (members.empty()) throw Error(ErrorCode::kNoDexEntries, "no classes*.dex member in archive");
  std::sort(members.begin(), members.end(),
            [](const ZipEntry& a, const ZipEntry& b) { return a.name < b.name; });

  Extraction out;
  out.report.app_id = app_id;
  for (const auto& member : members) {
    try {
      const auto dex = zip.read(member);
      append(out, extract_from_dex(dex, app_id, options), member.name + ": ");
    } catch (const Error& e) {
      out.report.parse_warnings.push_back(member.name + ": " + e.what());
    }
  }
  return out;
}

Extraction extract_from_smali_tree(const std::filesystem::path& root, std::string app_id,
                                   const ExtractOptions& options) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) {
    files.push_back(root);
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().extension() == ".smali") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  Extraction out;
  out.report.app_id = std::move(app_id);
  for (const auto& file : files) {
    const auto bytes = read_file_bytes(file);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const std::string name = fs::is_regular_file(root) ? file.filename().generic_string()
                                                       : fs::relative(file, root).generic_string();
    try {
      for (auto& seq : extract_from_smali(text, name)) {
        if (seq.opcodes.size() < options.min_length) {
          ++out.report.filtered_methods;
          continue;
        }
        out.sequences.push_back(std::move(seq));
      }
    } catch (const Error& e) {
      out.report.parse_warnings.push_back(name + ": " + e.what());
    }
  }
  out.report.method_count = out.sequences.size();
  return out;
}

Extraction extract_app(const std::filesystem::path& path, InputFormat format, std::string app_id,
                       const ExtractOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, path.string() + " does not exist");
  if (fs::is_directory(path) || format == InputFormat::kSmali) {
    if (format != InputFormat::kAuto && format != InputFormat::kSmali) {
      throw Error(ErrorCode::kInvalidInput, path.string() + " is a directory; only smali apps are directories");
    }
    return extract_from_smali_tree(path, std::move(app_id), options);
  }
  const auto bytes = read_file_bytes(path);
  if (format == InputFormat::kAuto) {
    if (has_zip_magic(bytes)) {
      format = InputFormat::kApk;
    } else if (has_dex_magic(bytes)) {
      format = InputFormat::kDex;
    } else if (path.extension() == ".smali") {
      return extract_from_smali_tree(path, std::move(app_id), options);
    } else {
      throw Error(ErrorCode::kInvalidInput, path.string() + ": not a DEX, APK or smali input");
    }
  }
  if (format == InputFormat::kApk) return extract_from_apk(bytes, std::move(app_id), options);
  return extract_from_dex(bytes, std::move(app_id), options);
}

}  // namespace dexdedup
