#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fishforge::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
};

/// Runs the `fishforge` command line. Never throws; failures are reported on
/// `err` and mapped to an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fishforge::cli
