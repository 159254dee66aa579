#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csprobe {

enum class ErrorKind {
  kParse,
  kValidation,
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kNonFinite,
  kDimensionMismatch,
  kInvalidArgument,
  kCapExceeded,
  kBudgetExceeded,
  kUndefinedCorrelation,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Configuration / input problems map to exit code 2, analysis failures to 1.
bool is_input_error(ErrorKind kind);

}  // namespace csprobe
