#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace histprior {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

/// Runs the command line `args` (args[0] is the program name). `in` backs
/// "-" input paths and `out` backs "-" output paths.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace histprior
