#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pcacouple::cli {

/// Exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  /// A check came out false, or a golden file differs.
  kExitVerdictFalse = 1,
  kExitUsage = 2,
  /// Cap exceeded or invalid input.
  kExitValidation = 3,
};

/// Environment variable consulted for the seed when --seed is absent.
inline constexpr const char* kSeedEnv = "PCACOUPLE_SEED";

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace pcacouple::cli
