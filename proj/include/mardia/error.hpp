#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mardia {

enum class ErrorCode {
  NonFinite,
  LagOutOfRange,
  SingularCovariance,
  IndexOutOfRange,
  NonPositiveS0,
  DegenerateCovariance,
  ModeDimensionMismatch,
  DomainError,
  Overflow,
  BudgetExceeded,
  ParameterOutOfDomain,
  InsufficientLength,
  InvalidArgument,
  Io,
  Parse,
  TooManyFailures,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::LagOutOfRange: return "LagOutOfRange";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonPositiveS0: return "NonPositiveS0";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::ModeDimensionMismatch: return "ModeDimensionMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ParameterOutOfDomain: return "ParameterOutOfDomain";
    case ErrorCode::InsufficientLength: return "InsufficientLength";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception; `code()`
/// lets callers branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mardia
