#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cskl {

/// Stable exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitNonConvergence = 3 };

/// Entry point of the `cskl` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cskl
