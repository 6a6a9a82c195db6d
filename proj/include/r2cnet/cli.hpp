#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace r2c::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Entry point behind the `r2cnet` executable. `args` excludes the program
/// name. Subcommands: train, eval, predict, stats, toygen.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace r2c::cli
