#pragma once

#include <stdexcept>
#include <string>

namespace si {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Error taxonomy shared by all modules. The CLI maps categories to exit
// codes, so keep the set small and stable.
enum class ErrorCategory {
  InvalidParameter,  // bad numeric argument (cutoff >= Nyquist, window > signal, ...)
  EmptyInput,        // operation requires non-empty input
  InvalidInput,      // inputs inconsistent with each other (rate mismatch, ...)
  Shape,             // tensor/sequence dimension mismatch
  Format,            // corrupt or unrecognized file content
  Io,                // missing file, unreadable/unwritable path
  Config,            // invalid run configuration
  Numeric,           // non-finite value where finite required
  Alignment,         // target/feature length discrepancy beyond tolerance
  Degenerate,        // degenerate input (all-masked loss, ...)
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(std::string(to_string(category)) + ": " + message),
        category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& message) {
  throw Error(c, message);
}

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidParameter: return "invalid-parameter";
    case ErrorCategory::EmptyInput: return "empty-input";
    case ErrorCategory::InvalidInput: return "invalid-input";
    case ErrorCategory::Shape: return "shape";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Alignment: return "alignment";
    case ErrorCategory::Degenerate: return "degenerate";
  }
  return "unknown";
}

}  // namespace si
