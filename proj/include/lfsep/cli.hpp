#pragma once

#include <string>
#include <vector>

namespace lfsep::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Never throws.
int run(const std::vector<std::string>& args);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace lfsep::cli
