#pragma once

#include <string>
#include <vector>

namespace prospect_drive
{

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNonConvergence = 3;

[[nodiscard]] int run_cli(int argc, char ** argv);
[[nodiscard]] int run_cli(const std::vector<std::string> & args);

}  // namespace prospect_drive
