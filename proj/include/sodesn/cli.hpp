#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sodesn/error.hpp"

namespace sodesn {

inline constexpr const char* kToolVersion = "0.1.0";

/// Environment variable naming the default run directory.
inline constexpr const char* kRunDirEnv = "SODESN_RUN_DIR";

/// Process exit code of an error category: usage 2, config 3, data 4, numeric 5.
int exit_code(ErrorCategory category);

/// Runs one command line (args excludes the program name) and returns the
/// exit code. Diagnostics go to `err` as `error: <category>: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sodesn
