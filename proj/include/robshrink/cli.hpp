#pragma once

#include <ostream>

namespace robshrink {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// Environment variable supplying the simulate seed when neither --seed nor
// the scenario file sets one.
inline constexpr const char *kSeedEnv = "ROBSHRINK_SEED";

// Entry point of the `robshrink` tool with subcommands estimate, simulate and
// backtest. Results go to files or `out`; diagnostics go to `err`.
int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

} // namespace robshrink
