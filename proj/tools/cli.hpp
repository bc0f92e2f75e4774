#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spda::cli {

/// Runs one command line (without the program name). Returns the process exit
/// code; reports go to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spda::cli
