#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qdforge::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeFailure = 1,
    kUsage = 2,
    kSidecarUnreachable = 3,
};

/// Runs one `qdforge` invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdforge::cli
