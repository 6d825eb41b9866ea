#pragma once

#include <string>
#include <vector>

namespace smogan {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitDiverged = 3 };

/// Runs one command line (argv without the program name). Messages go to
/// stderr; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace smogan
