#pragma once

#include <iosfwd>
#include <string_view>

namespace csprobe::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Runs one csprobe command. Returns 0 on success, 1 when an analysis fails
// and 2 for configuration or input problems.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace csprobe::cli
