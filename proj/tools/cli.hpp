#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sigsel::cli {

/// Exit codes of cli_main.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;

/// Runs one subcommand; `args` excludes the program name.
int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace sigsel::cli
