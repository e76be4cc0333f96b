#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impvol {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one impvol command. args excludes the program name. Reports go to
/// --out or `out`; diagnostics and progress to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impvol
