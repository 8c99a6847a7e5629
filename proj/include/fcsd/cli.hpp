#pragma once

// Command-line front end. Exit codes: 0 success, 1 input error (including
// unknown flags and infeasible instances), 2 solver non-convergence.

#include <iosfwd>
#include <string>
#include <vector>

namespace fcsd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitSolver = 2;

/// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

/// Hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace fcsd
