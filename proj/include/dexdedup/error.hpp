#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dexdedup {

enum class ErrorCode {
  kMalformedDex,
  kMethodParseError,
  kUnknownMnemonic,
  kMalformedSmali,
  kMalformedZip,
  kNoDexEntries,
  kEmptyApp,
  kEmptyFingerprint,
  kDuplicateAppId,
  kEmptyCorpus,
  kMismatchedClusterSet,
  kNoManifest,
  kMalformedManifest,
  kWidthMismatch,
  kCsvParseError,
  kDegenerateLabels,
  kTooFewSamples,
  kNoDuplicates,
  kMissingArtifact,
  kInvalidConfig,
  kInvalidInput,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI exit path) can branch on the kind without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDex: return "MalformedDex";
    case ErrorCode::kMethodParseError: return "MethodParseError";
    case ErrorCode::kUnknownMnemonic: return "UnknownMnemonic";
    case ErrorCode::kMalformedSmali: return "MalformedSmali";
    case ErrorCode::kMalformedZip: return "MalformedZip";
    case ErrorCode::kNoDexEntries: return "NoDexEntries";
    case ErrorCode::kEmptyApp: return "EmptyApp";
    case ErrorCode::kEmptyFingerprint: return "EmptyFingerprint";
    case ErrorCode::kDuplicateAppId: return "DuplicateAppId";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kMismatchedClusterSet: return "MismatchedClusterSet";
    case ErrorCode::kNoManifest: return "NoManifest";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kWidthMismatch: return "WidthMismatch";
    case ErrorCode::kCsvParseError: return "CsvParseError";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kNoDuplicates: return "NoDuplicates";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace dexdedup
