#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace acmptc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point behind the `acmptc` binary. Never throws; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "7", "3..9" (inclusive) or "1,4,5". Throws InputError when malformed or empty.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace acmptc::cli
