#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace steinpoly {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs the steinpoly command line with args (without the program name).
/// Artifacts go to --out when given, otherwise the primary one to out.
/// Diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "lo:hi:count" into count equispaced points with both endpoints.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace steinpoly
