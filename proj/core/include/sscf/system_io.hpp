#pragma once

// System directory: H0.mtx, S.mtx, gamma.mtx and system.json.

#include <filesystem>

#include "sscf/dftb.hpp"

namespace sscf::dftb {

// Writes the four files, replacing existing ones. Io on failure.
void write_system(const TightBindingSystem& sys, const std::filesystem::path& dir);

// ParseError for malformed files, InvalidSystem / NotPositiveDefinite when the
// contents violate the system invariants.
TightBindingSystem read_system(const std::filesystem::path& dir);

}  // namespace sscf::dftb
