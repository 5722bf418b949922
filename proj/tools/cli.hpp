#pragma once

// Command-line front end. run() is the whole program minus process setup, so
// tests and the replay subcommand can drive it in-process.

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hybridlab::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 20130611;

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitResource = 3,
  kExitInvariant = 4,
};

/// `args` excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace hybridlab::cli
