#pragma once

#include <string>
#include <vector>

namespace sdfedit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMissingStage = 2;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// stderr; the return value is the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace sdfedit::cli
