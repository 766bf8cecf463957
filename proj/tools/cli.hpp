#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vlanet::cli {

/// Runs one `vlanet` invocation. args excludes the program name. Returns the
/// process exit code: 0 on success, 1 on a runtime failure, 2 on bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vlanet::cli
