#pragma once

#include <string>
#include <vector>

#include "pcacouple_cli/config.hpp"

namespace pcacouple::cli {

/// Ready-made experiments: example1-h, example1-beta, example2,
/// example2-negative, example3, counterexample-A, counterexample-B and the
/// spin spaces S_A .. S_D. Throws InvalidInput for an unknown name.
ExperimentConfig builtin_config(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace pcacouple::cli
