#pragma once

// Random probe vectors and the Hutchinson-type diagonal estimator.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sscf/matkit.hpp"

namespace sscf::estimator {

enum class ProbeKind { Rademacher, Gaussian };

struct ProbeDistribution {
  ProbeKind kind = ProbeKind::Rademacher;
  Index dim = 0;
};

// Counter-based stream: the generated numbers are a pure function of
// (master_seed, iteration_index, sample_index).
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t iteration_index = 0;
  std::uint64_t sample_index = 0;

  std::mt19937_64 engine() const;
  RngStream with_sample(std::uint64_t sample) const {
    return {master_seed, iteration_index, sample};
  }
};

Vector draw_probe(const ProbeDistribution& dist, const RngStream& stream);

struct DiagonalEstimate {
  Vector mean;
  Vector variance;  // per-entry sample variance (n − 1 denominator); zero when n_vec == 1
};

// (1/n) Σᵢ (A vᵢ) ⊙ vᵢ with vᵢ drawn from stream.with_sample(i), reduced in
// ascending sample order.
DiagonalEstimate diag_estimate(const std::function<Vector(const Vector&)>& apply,
                               const ProbeDistribution& dist, Index n_vec,
                               const RngStream& stream);

// Every ±1 vector of length dim (dim ≤ 12) in lexicographic order with +1 < −1.
std::vector<Vector> enumerate_rademacher(Index dim);

inline constexpr Index kMaxEnumerationDim = 12;

}  // namespace sscf::estimator
