#pragma once

#include <string>
#include <vector>

namespace pinnburn {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand (simulate, fit, bootstrap, diagnose, predict, perturb).
/// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);

}  // namespace pinnburn
