#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kerf::cli {

/// Runs one kerf command. args excludes the program name. Data goes to `out`
/// (or the file named by the command), diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kerf::cli
