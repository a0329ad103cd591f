#pragma once

// The sscf command-line front end, callable in-process.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace sscf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvalidSystem = 3;
inline constexpr int kExitNoConvergence = 4;
inline constexpr int kExitDivergence = 5;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `requested` if it does not exist or is an empty directory, otherwise the
// first of requested-2, requested-3, … that does not exist.
std::filesystem::path fresh_directory(const std::filesystem::path& requested);

}  // namespace sscf::cli
