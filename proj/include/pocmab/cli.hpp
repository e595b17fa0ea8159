#pragma once

#include <string>
#include <vector>

namespace pocmab {

/// Entry point behind the `pocmab` binary, callable in-process.
/// Exit codes: 0 success, 1 validation/runtime failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

/// Convenience overload; `args` excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace pocmab
