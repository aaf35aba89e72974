#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace safescreen::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageOrDataError = 1,
  kVerificationFailure = 2,
  kNumericalInconsistency = 3,
};

/// Runs one command line (args[0] is the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "start:step:end" into the inclusive grid start, start + step, ...
std::vector<double> parse_ratio_grid(const std::string& text);

/// Parses a --gamma value: a positive number or "auto:k" meaning k / dim.
double parse_gamma(const std::string& text, std::size_t dim);

}  // namespace safescreen::cli
