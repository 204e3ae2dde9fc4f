#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spinedrill {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitSolver = 3,
  kExitInfeasible = 4,
};

/// Runs the command line `args` (program name excluded), e.g.
/// {"--out-dir", "run", "plan", "phantom.json", "space.json"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spinedrill
