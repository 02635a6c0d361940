#pragma once

#include <iosfwd>

namespace cptt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `cptt` tool. Normal output goes to `out`, diagnostics
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cptt::cli
