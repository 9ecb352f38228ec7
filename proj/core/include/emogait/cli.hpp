#pragma once

#include <string>
#include <vector>

namespace emogait::cli {

/// Entry point for the emogait command-line tool. Returns the process exit
/// status: 0 on success, 1 on validation/usage errors, 2 on numerical
/// failure. Diagnostics go to stderr; results go to files or stdout.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace emogait::cli
