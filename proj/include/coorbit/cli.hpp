#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coorbit::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 usage, 2 domain failure, 3 parse error, 4 I/O.
enum ExitCode : int { kOk = 0, kUsage = 1, kDomain = 2, kParse = 3, kIo = 4 };

/// Runs one command line (without the program name). Reports go to `out`
/// unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coorbit::cli
