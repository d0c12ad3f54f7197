#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparse_design::cli {

/// Runs one command line (argv[0] is the program name). Errors are reported
/// as a single `error: <kind>: <message>` line on `err`; the return value is
/// the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparse_design::cli
