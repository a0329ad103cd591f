#pragma once

// Lanczos tridiagonalization and Krylov approximation of f(A)v, plus the
// Chebyshev reference path and the Bernstein-ellipse radius.

#include <functional>

#include "sscf/matkit.hpp"

namespace sscf::krylov {

// Action x ↦ A x of a symmetric operator.
using LinearOperator = std::function<Vector(const Vector&)>;

struct LanczosResult {
  double v_norm = 0.0;
  Matrix basis;              // M × steps_taken, orthonormal columns
  SymmetricMatrix tridiag;   // steps_taken × steps_taken
  Vector alpha;              // diagonal of tridiag
  Vector beta;               // off-diagonal, size steps_taken - 1
  Index steps_taken = 0;
};

// Lanczos with full reorthogonalization. Stops early when an off-diagonal
// coefficient falls below 1e-13 times the operator scale (invariant subspace).
// `scale` is an upper bound on ‖A‖₂; pass 0 to use the running estimate
// max(|α_j|, β_j).
LanczosResult lanczos(const LinearOperator& op, const Vector& v, Index ell, double scale = 0.0);
LanczosResult lanczos(const SymmetricMatrix& a, const Vector& v, Index ell);

inline constexpr double kBreakdownTolerance = 1e-13;

// ‖v‖₂ V_ℓ f(T_ℓ) e₁ with f(T_ℓ) from a dense eigendecomposition of T_ℓ.
Vector krylov_apply_f(const LanczosResult& lanczos, const ScalarFunction& f);
Vector krylov_apply_f(const LinearOperator& op, const Vector& v, Index ell,
                      const ScalarFunction& f, double scale = 0.0);
Vector krylov_apply_f(const SymmetricMatrix& a, const Vector& v, Index ell,
                      const ScalarFunction& f);

struct ChebyshevApprox {
  Index degree = 0;
  Vector coefficients;  // c₀ … c_degree, with the usual halved c₀ folded in
  double lower = -1.0;
  double upper = 1.0;

  // Scalar evaluation of the expansion at x ∈ [lower, upper].
  double operator()(double x) const;
};

// Chebyshev interpolant of f on [lower, upper] at degree+1 Chebyshev points.
ChebyshevApprox chebyshev_fit(const ScalarFunction& f, double lower, double upper, Index degree);

// Clenshaw recurrence for p(A)v through the map A ↦ (2A − (a+b)I)/(b − a).
// Throws IntervalTooSmall when the spectrum of A leaves [a, b] by more than
// 1e-12 (b − a).
Vector chebyshev_apply(const ChebyshevApprox& approx, const SymmetricMatrix& a, const Vector& v);

// Root ρ > 1 of ρ − 1/ρ = 4π / (β (λ_max − λ_min)).
double bernstein_rho(double lambda_min, double lambda_max, double beta);

}  // namespace sscf::krylov
