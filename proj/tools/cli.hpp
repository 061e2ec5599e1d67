#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synchronic::cli {

/// Runs one `synchronic` command line. Exit codes: 0 success, 1 user error or
/// failed verification, 2 machine error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synchronic::cli
