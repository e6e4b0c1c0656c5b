#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace selrcn::cli {

/// Runs the command line `args` (without the program name). Returns 0 on
/// success, 1 on usage errors and 2 on runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace selrcn::cli
