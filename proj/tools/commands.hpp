#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alignkit::cli {

// Runs the `alignkit` command line. `args` excludes the program name. Reports
// go to `out`, diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alignkit::cli
