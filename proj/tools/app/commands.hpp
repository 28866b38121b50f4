#pragma once

#include <string>
#include <vector>

namespace ladbnet::app {

/// Runs one CLI invocation (args excludes the program name). Returns the
/// process exit code: 0 success, 1 runtime error, 2 usage error.
int run(const std::vector<std::string>& args);

}  // namespace ladbnet::app
