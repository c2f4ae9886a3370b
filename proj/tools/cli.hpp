#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace litevp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // run failed or some entries failed
inline constexpr int kExitUsage = 2;    // bad flags, config or missing arguments

/// args excludes the program name. Results go to `out`, logs and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace litevp::cli
