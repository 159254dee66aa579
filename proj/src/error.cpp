#include "csprobe/error.hpp"

namespace csprobe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kUnsupportedVersion: return "unsupported version";
    case ErrorKind::kTruncated: return "truncated input";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kCapExceeded: return "node cap exceeded";
    case ErrorKind::kBudgetExceeded: return "search budget exceeded";
    case ErrorKind::kUndefinedCorrelation: return "undefined correlation";
  }
  return "unknown error";
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kIo:
    case ErrorKind::kBadMagic:
    case ErrorKind::kUnsupportedVersion:
    case ErrorKind::kTruncated:
    case ErrorKind::kNonFinite:
    case ErrorKind::kInvalidArgument:
      return true;
    default:
      return false;
  }
}

}  // namespace csprobe
