#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace texmesh::cli {

/// Runs one invocation; `args` excludes the program name. Returns the exit
/// code: 0 success, 1 runtime failure, 2 usage or missing input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace texmesh::cli
