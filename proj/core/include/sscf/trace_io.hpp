#pragma once

// CSV / JSON serialization of run configurations and iteration traces.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "sscf/mixing.hpp"

namespace sscf::mixing {

inline constexpr int kTraceSchemaVersion = 1;

std::string config_to_json(const MixingConfig& cfg);
// Fields present in `json` override those of `base`. InvalidArgument on
// unknown keys or wrong types.
MixingConfig config_from_json(const std::string& json, const MixingConfig& base = {});

// Columns: n, a_n, res_proxy_inf, [err_inf], [b_1..b_m], wall_ms. err_inf is
// ‖mean of the last ≤ err_window iterates − q*‖∞ and appears only with q_star.
void write_trace_csv(const IterationTrace& trace, std::ostream& out,
                     const std::optional<Vector>& q_star = std::nullopt, Index err_window = 1000);
void write_trace_csv(const IterationTrace& trace, const std::filesystem::path& path,
                     const std::optional<Vector>& q_star = std::nullopt, Index err_window = 1000);

// {"final": [...], "averaged": [...] | null, "steps": T, "stopped_on_tol": bool}
std::string trace_sidecar_json(const IterationTrace& trace);

std::string vector_to_json(const Vector& v);
Vector vector_from_json(const std::string& json);  // ParseError

}  // namespace sscf::mixing
