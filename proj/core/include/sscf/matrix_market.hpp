#pragma once

#include <filesystem>
#include <iosfwd>

#include "sscf/matkit.hpp"

namespace sscf {

// Accepts `coordinate real symmetric` (lower triangle only), `coordinate real
// general`, `array real general` and `array real symmetric`. General inputs
// must be exactly symmetric. Errors carry the offending line number.
SymmetricMatrix read_matrix_market(std::istream& in);
SymmetricMatrix read_matrix_market(const std::filesystem::path& path);

// Writes `coordinate real symmetric` with the nonzero lower triangle at 17
// significant digits, so read(write(M)) == M bit for bit.
void write_matrix_market(const SymmetricMatrix& m, std::ostream& out);
void write_matrix_market(const SymmetricMatrix& m, const std::filesystem::path& path);

}  // namespace sscf
