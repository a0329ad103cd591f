#include "sscf/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sscf/error.hpp"

namespace sscf::krylov {

LanczosResult lanczos(const LinearOperator& op, const Vector& v, Index ell, double scale) {
  const Index m = v.size();
  require(m >= 1, ErrorKind::InvalidArgument, "start vector must be non-empty");
  require(ell >= 1 && ell <= m, ErrorKind::InvalidArgument,
          "Krylov dimension must satisfy 1 <= ell <= M");
  const double v_norm = v.norm();
  if (!(v_norm > 0.0)) fail(ErrorKind::ZeroStartVector, "Lanczos start vector is zero");

  Matrix basis(m, ell);
  Vector alpha(ell);
  Vector beta(std::max<Index>(ell - 1, 0));
  basis.col(0) = v / v_norm;
  double running_scale = scale;
  Index steps = ell;

  for (Index j = 0; j < ell; ++j) {
    Vector w = op(basis.col(j));
    require(w.size() == m, ErrorKind::LengthMismatch, "operator returned wrong size");
    alpha(j) = basis.col(j).dot(w);
    running_scale = std::max(running_scale, std::abs(alpha(j)));
    if (j + 1 == ell) break;

    // Two passes of classical Gram-Schmidt against the whole basis.
    auto q = basis.leftCols(j + 1);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = q.transpose() * w;
      w.noalias() -= q * h;
    }
    const double b = w.norm();
    if (scale <= 0.0) running_scale = std::max(running_scale, b);
    if (b <= kBreakdownTolerance * running_scale || b == 0.0) {
      steps = j + 1;
      break;
    }
    beta(j) = b;
    basis.col(j + 1) = w / b;
  }

  LanczosResult out;
  out.v_norm = v_norm;
  out.steps_taken = steps;
  out.basis = basis.leftCols(steps);
  out.alpha = alpha.head(steps);
  out.beta = beta.head(std::max<Index>(steps - 1, 0));
  Matrix t = Matrix::Zero(steps, steps);
  t.diagonal() = out.alpha;
  for (Index i = 0; i + 1 < steps; ++i) {
    t(i + 1, i) = out.beta(i);
    t(i, i + 1) = out.beta(i);
  }
  out.tridiag = SymmetricMatrix::from_dense(t);
  return out;
}

LanczosResult lanczos(const SymmetricMatrix& a, const Vector& v, Index ell) {
  require(v.size() == a.dim(), ErrorKind::LengthMismatch, "start vector size mismatch");
  const Matrix& dense = a.dense();
  // Frobenius norm bounds ‖A‖₂ from above.
  return lanczos([&dense](const Vector& x) -> Vector { return dense * x; }, v, ell,
                 dense.norm());
}

Vector krylov_apply_f(const LanczosResult& lz, const ScalarFunction& f) {
  const EigenDecomposition eig = eig_sym(lz.tridiag);
  // f(T) e₁ = U f(D) Uᵀ e₁
  Vector coeff = eig.eigenvectors.row(0).transpose();
  for (Index i = 0; i < coeff.size(); ++i) coeff(i) *= f(eig.eigenvalues(i));
  return lz.v_norm * (lz.basis * (eig.eigenvectors * coeff));
}

Vector krylov_apply_f(const LinearOperator& op, const Vector& v, Index ell,
                      const ScalarFunction& f, double scale) {
  return krylov_apply_f(lanczos(op, v, ell, scale), f);
}

Vector krylov_apply_f(const SymmetricMatrix& a, const Vector& v, Index ell,
                      const ScalarFunction& f) {
  return krylov_apply_f(lanczos(a, v, ell), f);
}

double ChebyshevApprox::operator()(double x) const {
  const double t = (2.0 * x - (upper + lower)) / (upper - lower);
  double b1 = 0.0, b2 = 0.0;
  for (Index k = degree; k >= 1; --k) {
    const double b0 = coefficients(k) + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coefficients(0) + t * b1 - b2;
}

ChebyshevApprox chebyshev_fit(const ScalarFunction& f, double lower, double upper, Index degree) {
  require(degree >= 0, ErrorKind::InvalidArgument, "Chebyshev degree must be >= 0");
  if (!(upper > lower)) fail(ErrorKind::DegenerateSpectrum, "Chebyshev interval is empty");
  const Index n = degree + 1;
  const double pi = std::numbers::pi;
  Vector fx(n);
  Vector theta(n);
  for (Index j = 0; j < n; ++j) {
    theta(j) = pi * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    const double x = std::cos(theta(j));
    fx(j) = f(0.5 * (upper - lower) * x + 0.5 * (upper + lower));
  }
  ChebyshevApprox out;
  out.degree = degree;
  out.lower = lower;
  out.upper = upper;
  out.coefficients.resize(n);
  for (Index k = 0; k < n; ++k) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) s += fx(j) * std::cos(static_cast<double>(k) * theta(j));
    out.coefficients(k) = (k == 0 ? 1.0 : 2.0) * s / static_cast<double>(n);
  }
  return out;
}

Vector chebyshev_apply(const ChebyshevApprox& approx, const SymmetricMatrix& a, const Vector& v) {
  require(v.size() == a.dim(), ErrorKind::LengthMismatch, "Chebyshev apply size mismatch");
  const double lo = approx.lower;
  const double hi = approx.upper;
  const double width = hi - lo;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.dense(), Eigen::EigenvaluesOnly);
    require(solver.info() == Eigen::Success, ErrorKind::NoConvergence,
            "symmetric eigensolver exceeded its iteration budget");
    const double slack = 1e-12 * width;
    if (solver.eigenvalues()(0) < lo - slack ||
        solver.eigenvalues()(solver.eigenvalues().size() - 1) > hi + slack) {
      fail(ErrorKind::IntervalTooSmall, "spectrum of A is not contained in the Chebyshev interval");
    }
  }
  const Matrix& dense = a.dense();
  auto scaled = [&](const Vector& x) -> Vector {
    return (2.0 * (dense * x) - (hi + lo) * x) / width;
  };
  // Clenshaw: b_k = c_k v + 2 Ã b_{k+1} − b_{k+2}; p(A)v = c₀ v + Ã b₁ − b₂.
  Vector b1 = Vector::Zero(v.size());
  Vector b2 = Vector::Zero(v.size());
  for (Index k = approx.degree; k >= 1; --k) {
    Vector b0 = approx.coefficients(k) * v + 2.0 * scaled(b1) - b2;
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  return approx.coefficients(0) * v + scaled(b1) - b2;
}

double bernstein_rho(double lambda_min, double lambda_max, double beta) {
  if (!(lambda_max > lambda_min)) {
    fail(ErrorKind::DegenerateSpectrum, "lambda_max must exceed lambda_min");
  }
  require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be positive");
  const double c = 4.0 * std::numbers::pi / (beta * (lambda_max - lambda_min));
  return 0.5 * (c + std::sqrt(c * c + 4.0));
}

}  // namespace sscf::krylov
