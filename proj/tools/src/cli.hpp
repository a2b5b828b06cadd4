#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nlsmc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Runs one command; `args` excludes the program name.
/// Returns 0 on success, 2 on configuration errors and 1 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlsmc::cli
