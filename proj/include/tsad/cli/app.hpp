#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsad::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kPartialFailure = 3 };

/// Runs one command line (args excludes the program name). Reports go to
/// `out`, progress and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsad::cli
