#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bdarma::cli {

/// Process exit codes. Stable across releases.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,     // unexpected failure
  kValidation = 2,   // bad flags, configuration or data
  kConvergence = 3,  // R-hat >= 1.01 (strict mode) or initialization failure
  kIo = 4,           // unreadable input or unwritable output
};

/// Runs the command line `args` (without the program name) and returns the
/// exit code. Messages go to `out`, errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bdarma::cli
