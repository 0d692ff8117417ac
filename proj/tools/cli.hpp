#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace chessrl::cli {

/// Runs the chessrl command line. `args` excludes the program name. Records
/// go to `out`; logs, tables and the one-line error report go to `err`.
/// Returns the process exit code: 0 success, 1 runtime error, 2 usage error.
/// `tables` enables human-readable tables on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool tables = false);

}  // namespace chessrl::cli
