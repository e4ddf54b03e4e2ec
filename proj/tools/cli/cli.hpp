#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsgatr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

/// Runs one `tsgatr` invocation; args excludes the program name. Normal
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsgatr::cli
