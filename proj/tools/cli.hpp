#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace amgenc::cli {

/// Exit codes of the command-line tool.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kInfeasible = 3;

/// Runs one invocation (args excludes the program name). Data goes to
/// `out`, reports and diagnostics to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace amgenc::cli
