#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tscal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;

/// Entry point of the `tscal` command. `args` excludes the program name.
/// Returns 0 on success and 2 on usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tscal
