#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mecopt::cli {

// Exit codes are a stable contract for scripts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mecopt::cli
