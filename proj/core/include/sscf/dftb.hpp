#pragma once

// Self-consistent-charge tight-binding model: orbital bookkeeping, the
// Hamiltonian correction, the exact charge map and its sampled counterpart.
//
// Sign convention: the charge fluctuation is Δq = q0 − q, where q0 are the
// isolated-atom reference charges and q the current electron counts.

#include <string>
#include <vector>

#include "sscf/estimator.hpp"
#include "sscf/krylov.hpp"
#include "sscf/matkit.hpp"

namespace sscf::dftb {

// Electron counts per atom.
using ChargeVector = Vector;

// Contiguous orbital blocks α¹ … α^N.
class OrbitalPartition {
 public:
  OrbitalPartition() = default;
  explicit OrbitalPartition(std::vector<Index> orbital_counts);
  static OrbitalPartition uniform(Index atoms, Index orbitals_per_atom);

  Index atom_count() const noexcept { return static_cast<Index>(counts_.size()); }
  Index total_orbitals() const noexcept { return total_; }
  Index offset(Index atom) const { return offsets_.at(static_cast<std::size_t>(atom)); }
  Index count(Index atom) const { return counts_.at(static_cast<std::size_t>(atom)); }
  const std::vector<Index>& orbital_counts() const noexcept { return counts_; }
  Index atom_of(Index orbital) const;

  // e ⊗_N v: element v_j repeated m_j times in block order.
  Vector expand(const Vector& v) const;
  // Σ_{μ∈α^j} x_μ for each atom j.
  Vector block_sums(const Vector& x) const;

 private:
  std::vector<Index> counts_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

struct TightBindingSystem {
  OrbitalPartition partition;
  SymmetricMatrix h0;     // M × M
  SymmetricMatrix s;      // M × M, positive definite
  SymmetricMatrix gamma;  // N × N
  ChargeVector q0;        // reference charges, electrons
  double mu = 0.0;        // Fermi level
  double beta = 1.0;      // inverse temperature
  std::string name;
  std::string generator_spec_json;  // empty when the system was not generated

  // Dimensions, q0 ≥ 0, β > 0 and positivity of S. Throws InvalidSystem or
  // NotPositiveDefinite.
  void validate() const;
};

// 2 / (1 + exp(β(x − μ))) evaluated without overflow.
double fermi_dirac(double x, double mu, double beta);

// A system with its Cholesky factor and A₀ = L⁻¹ H₀ L⁻ᵀ cached. Immutable
// after construction; concurrent evaluation is safe.
class ChargeModel {
 public:
  explicit ChargeModel(TightBindingSystem sys);

  const TightBindingSystem& system() const noexcept { return sys_; }
  const CholeskyFactor& factor() const noexcept { return factor_; }
  const SymmetricMatrix& a0() const noexcept { return a0_; }
  Index atoms() const noexcept { return sys_.partition.atom_count(); }
  Index orbitals() const noexcept { return sys_.partition.total_orbitals(); }

  ScalarFunction occupation() const;

  // e ⊗_N Γ (q0 − q).
  Vector orbital_shift(const ChargeVector& q) const;

  // A₀ + ½ sym(L⁻¹ diag(e ⊗_N ΓΔq) L), dense.
  SymmetricMatrix build_a(const ChargeVector& q) const;

  // Matrix-free action of the same A: two triangular solves and two
  // triangular products per application.
  krylov::LinearOperator a_operator(const ChargeVector& q) const;

  // K(q): block traces of diag(L f(A) L⁻¹) on the exact spectral path.
  ChargeVector charge_exact(const ChargeVector& q) const;

  // k_ℓ(q, v): block sums of (L ‖w‖ V_ℓ f(T_ℓ) e₁) ⊙ v with w = L⁻¹ v.
  ChargeVector charge_sample(const ChargeVector& q, Index ell, const Vector& probe) const;

  // Mean of n_vec samples drawn from stream.with_sample(i), i ascending.
  ChargeVector charge_sample_mean(const ChargeVector& q, Index ell,
                                  estimator::ProbeKind kind, Index n_vec,
                                  const estimator::RngStream& stream) const;

 private:
  ChargeVector charge_sample_with(const krylov::LinearOperator& op, Index ell,
                                  const Vector& probe) const;

  TightBindingSystem sys_;
  CholeskyFactor factor_;
  SymmetricMatrix a0_;
};

}  // namespace sscf::dftb
