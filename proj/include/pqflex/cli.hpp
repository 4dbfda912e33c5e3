#pragma once

#include <ostream>

namespace pqflex {

enum ExitCode : int { kExitOk = 0, kExitVerification = 1, kExitUsage = 2, kExitComputation = 3 };

/// Entry point of the command-line tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pqflex
