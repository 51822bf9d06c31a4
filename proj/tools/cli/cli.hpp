#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace errloc::cli {

enum ExitCode : int { ok = 0, usage = 2, fit_failure = 3, data_error = 4 };

/// Runs one command line (args excludes the program name). Paths are
/// relative to the working directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace errloc::cli
