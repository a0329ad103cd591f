#pragma once

// Dense symmetric linear algebra: storage, Cholesky, symmetric eigensolver and
// the exact spectral matrix-function path used as the reference oracle.

#include <functional>

#include <Eigen/Core>

namespace sscf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using ScalarFunction = std::function<double(double)>;

// Dense real symmetric matrix. Every mutation writes both triangles, so
// (i,j) and (j,i) are always bit-identical.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(Index dim);

  // Rejects anything that is not exactly symmetric (AsymmetricInput).
  static SymmetricMatrix from_dense(const Matrix& m);
  // Mirrors the lower triangle; the strict upper triangle of `m` is ignored.
  static SymmetricMatrix from_lower(const Matrix& m);
  // (m + mᵀ)/2.
  static SymmetricMatrix symmetrized(const Matrix& m);
  static SymmetricMatrix identity(Index dim);
  static SymmetricMatrix diagonal(const Vector& d);

  Index dim() const noexcept { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  void set(Index i, Index j, double value);
  void add(Index i, Index j, double value);

  const Matrix& dense() const noexcept { return m_; }
  Vector apply(const Vector& v) const;
  double max_abs() const;

  SymmetricMatrix shifted(double s) const;

  friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  explicit SymmetricMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

// S = L Lᵀ with L lower triangular. Inverses are never formed; the factor
// exposes triangular solves and products instead.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  Index dim() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }

  Vector solve_lower(const Vector& v) const;   // L⁻¹ v
  Vector solve_upper(const Vector& v) const;   // L⁻ᵀ v
  Matrix solve_lower(const Matrix& m) const;   // L⁻¹ M
  Matrix solve_upper(const Matrix& m) const;   // L⁻ᵀ M
  Vector multiply(const Vector& v) const;      // L v
  Vector multiply_transpose(const Vector& v) const;  // Lᵀ v

 private:
  friend CholeskyFactor cholesky(const SymmetricMatrix& s);
  Matrix lower_;
};

// Unpivoted Cholesky. Throws NotPositiveDefinite if any pivot is <= 0.
CholeskyFactor cholesky(const SymmetricMatrix& s);

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns
};

EigenDecomposition eig_sym(const SymmetricMatrix& a);

// Q f(Λ) Qᵀ v.
Vector apply_matrix_function(const EigenDecomposition& eig, const ScalarFunction& f,
                             const Vector& v);
Vector apply_matrix_function(const SymmetricMatrix& a, const ScalarFunction& f,
                             const Vector& v);
// Q f(Λ) Qᵀ, dense.
Matrix matrix_function(const EigenDecomposition& eig, const ScalarFunction& f);

double spectral_norm(const SymmetricMatrix& a);

}  // namespace sscf
