#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace roaid::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataFailure = 3,
  kCoverFailure = 4,
  kSolverFailure = 5,
};

/// Default cross-validation grids used when --sigma or --lambda is auto.
std::vector<double> default_sigma_grid();
std::vector<double> default_lambda_grid();

/// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace roaid::cli
