#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace citeidx::cli {

/// Exit codes: 0 success, 1 validation error, 2 runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace citeidx::cli
