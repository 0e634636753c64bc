#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace maxk::cli {

/// Entry point of the maxkgnn tool. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maxk::cli
