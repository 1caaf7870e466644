#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lrmt::cli {

/// Entry point of the `lrmt` tool. Returns the process exit status:
/// 0 success, 2 usage error, 3 data error, 4 numerical failure.
int run(int argc, char** argv);

/// Same as above with explicit arguments (without the program name) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrmt::cli
