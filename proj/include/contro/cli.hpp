#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace contro {

inline constexpr std::string_view kVersion = "0.1.0";

/// Exit codes of run_cli.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point behind the `contro` binary. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace contro
