#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spcc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name. Machine output goes to `out`, diagnostics
// and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spcc
