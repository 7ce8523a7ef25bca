#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace readmit {

enum class ErrorCode {
  // input / usage
  InvalidArgument,
  MalformedCsv,
  EmptyKeyPart,
  InvalidDate,
  UnmappableFamilyType,
  MissingAge,
  InfeasibleSpec,
  // io
  Io,
  // computation
  AsOfBeforeEntry,
  NoEpisodes,
  EmptyAfterFiltering,
  ClassTooSmall,
  MinorityTooSmall,
  SingleClass,
  Diverged,
  WidthMismatch,
  LengthMismatch,
  NoPositives,
  EmptyMatrix,
};

// Process exit codes used by the CLI.
enum class ErrorCategory { Usage = 2, Io = 3, Computation = 4 };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::EmptyKeyPart: return "EmptyKeyPart";
    case ErrorCode::InvalidDate: return "InvalidDate";
    case ErrorCode::UnmappableFamilyType: return "UnmappableFamilyType";
    case ErrorCode::MissingAge: return "MissingAge";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::Io: return "Io";
    case ErrorCode::AsOfBeforeEntry: return "AsOfBeforeEntry";
    case ErrorCode::NoEpisodes: return "NoEpisodes";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::MinorityTooSmall: return "MinorityTooSmall";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MalformedCsv:
    case ErrorCode::EmptyKeyPart:
    case ErrorCode::InvalidDate:
    case ErrorCode::UnmappableFamilyType:
    case ErrorCode::MissingAge:
    case ErrorCode::InfeasibleSpec:
      return ErrorCategory::Usage;
    case ErrorCode::Io:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Computation;
  }
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace readmit
