#pragma once

// Reference computations that avoid the library's own paths.

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sscf/dftb.hpp"

namespace sscf::testing {

inline double occupation(double x, double mu, double beta) {
  return 2.0 / (1.0 + std::exp(beta * (x - mu)));
}

// e ⊗ Γ(q0 − q), built by explicit loops.
inline Vector orbital_potential(const dftb::TightBindingSystem& sys, const Vector& q) {
  const Vector shift = sys.gamma.dense() * (sys.q0 - q);
  Vector d(sys.partition.total_orbitals());
  Index mu = 0;
  for (Index a = 0; a < sys.partition.atom_count(); ++a)
    for (Index k = 0; k < sys.partition.count(a); ++k) d(mu++) = shift(a);
  return d;
}

// H0 + ½(D S + S D)
inline Matrix corrected_hamiltonian(const dftb::TightBindingSystem& sys, const Vector& q) {
  const Vector d = orbital_potential(sys, q);
  const Matrix& s = sys.s.dense();
  return sys.h0.dense() + 0.5 * (d.asDiagonal() * s + s * d.asDiagonal());
}

// L⁻¹ H L⁻ᵀ with an explicit inverse factor.
inline Matrix hspace_a(const dftb::TightBindingSystem& sys, const Vector& q) {
  const Matrix l = Eigen::LLT<Matrix>(sys.s.dense()).matrixL();
  const Matrix linv = l.inverse();
  return linv * corrected_hamiltonian(sys, q) * linv.transpose();
}

// Orbital-sum charges from the generalized problem H c = ε S c:
// q(j) = Σᵢ f(εᵢ) Σ_{μ∈j} c_μi (S cᵢ)_μ.
inline Vector orbital_sum_charges(const dftb::TightBindingSystem& sys, const Vector& q) {
  const Matrix h = corrected_hamiltonian(sys, q);
  const Matrix& s = sys.s.dense();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(h, s);
  const Matrix& c = ges.eigenvectors();
  const Matrix sc = s * c;
  Vector out = Vector::Zero(sys.partition.atom_count());
  for (Index i = 0; i < c.cols(); ++i) {
    const double n = occupation(ges.eigenvalues()(i), sys.mu, sys.beta);
    Index mu = 0;
    for (Index a = 0; a < sys.partition.atom_count(); ++a)
      for (Index k = 0; k < sys.partition.count(a); ++k, ++mu) out(a) += n * c(mu, i) * sc(mu, i);
  }
  return out;
}

}  // namespace sscf::testing
