#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace popdense::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kInsufficientData = 2;
inline constexpr int kDegenerate = 3;

/// Runs one subcommand. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace popdense::cli
