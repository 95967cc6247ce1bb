#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace socrat::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBlackBoxFailure = 2;
inline constexpr int kInfeasible = 3;
inline constexpr int kParseError = 4;
inline constexpr int kUsage = 64;

// args[0] is the program name. Results go to `out` unless --out is given;
// diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace socrat::cli
