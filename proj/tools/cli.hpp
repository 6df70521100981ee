#pragma once

#include <string>
#include <vector>

namespace vpsfem::cli {

/// Exit codes: 0 success, 2 failed validation or structure check, 1 any
/// other error (bad arguments, malformed config, I/O, solver failure).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace vpsfem::cli
