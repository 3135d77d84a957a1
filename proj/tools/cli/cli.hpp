#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcause::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitGateFail = 2;
inline constexpr int kExitRefusal = 3;

// Runs one command line (args[0] is the program name). Output files go to
// the resolved out_dir; `out` receives the result summary, `err` diagnostics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcause::cli
