#include "sscf/matkit.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sscf/error.hpp"

namespace sscf {

SymmetricMatrix::SymmetricMatrix(Index dim) : m_(Matrix::Zero(dim, dim)) {
  require(dim >= 1, ErrorKind::InvalidArgument, "symmetric matrix dimension must be >= 1");
}

SymmetricMatrix SymmetricMatrix::from_dense(const Matrix& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::LengthMismatch,
          "symmetric matrix must be square and non-empty");
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) {
      if (m(i, j) != m(j, i)) {
        fail(ErrorKind::AsymmetricInput, "entry (" + std::to_string(i + 1) + "," +
                                             std::to_string(j + 1) + ") differs from its transpose");
      }
    }
  }
  return SymmetricMatrix(m);
}

SymmetricMatrix SymmetricMatrix::from_lower(const Matrix& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::LengthMismatch,
          "symmetric matrix must be square and non-empty");
  Matrix full = m.triangularView<Eigen::Lower>();
  full.triangularView<Eigen::StrictlyUpper>() = full.transpose();
  return SymmetricMatrix(std::move(full));
}

SymmetricMatrix SymmetricMatrix::symmetrized(const Matrix& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::LengthMismatch,
          "symmetric matrix must be square and non-empty");
  Matrix full = 0.5 * (m + m.transpose());
  // The two halves of the sum round identically, but make it explicit.
  full.triangularView<Eigen::StrictlyUpper>() = full.transpose();
  return SymmetricMatrix(std::move(full));
}

SymmetricMatrix SymmetricMatrix::identity(Index dim) {
  require(dim >= 1, ErrorKind::InvalidArgument, "symmetric matrix dimension must be >= 1");
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& d) {
  require(d.size() >= 1, ErrorKind::InvalidArgument, "diagonal must be non-empty");
  return SymmetricMatrix(Matrix(d.asDiagonal()));
}

void SymmetricMatrix::set(Index i, Index j, double value) {
  m_(i, j) = value;
  m_(j, i) = value;
}

void SymmetricMatrix::add(Index i, Index j, double value) {
  m_(i, j) += value;
  if (i != j) m_(j, i) = m_(i, j);
}

Vector SymmetricMatrix::apply(const Vector& v) const {
  require(v.size() == dim(), ErrorKind::LengthMismatch, "matrix-vector size mismatch");
  return m_ * v;
}

double SymmetricMatrix::max_abs() const { return m_.cwiseAbs().maxCoeff(); }

SymmetricMatrix SymmetricMatrix::shifted(double s) const {
  Matrix m = m_;
  m.diagonal().array() += s;
  return SymmetricMatrix(std::move(m));
}

Vector CholeskyFactor::solve_lower(const Vector& v) const {
  require(v.size() == dim(), ErrorKind::LengthMismatch, "triangular solve size mismatch");
  return lower_.triangularView<Eigen::Lower>().solve(v);
}

Vector CholeskyFactor::solve_upper(const Vector& v) const {
  require(v.size() == dim(), ErrorKind::LengthMismatch, "triangular solve size mismatch");
  return lower_.transpose().triangularView<Eigen::Upper>().solve(v);
}

Matrix CholeskyFactor::solve_lower(const Matrix& m) const {
  require(m.rows() == dim(), ErrorKind::LengthMismatch, "triangular solve size mismatch");
  return lower_.triangularView<Eigen::Lower>().solve(m);
}

Matrix CholeskyFactor::solve_upper(const Matrix& m) const {
  require(m.rows() == dim(), ErrorKind::LengthMismatch, "triangular solve size mismatch");
  return lower_.transpose().triangularView<Eigen::Upper>().solve(m);
}

Vector CholeskyFactor::multiply(const Vector& v) const {
  require(v.size() == dim(), ErrorKind::LengthMismatch, "triangular product size mismatch");
  return lower_.triangularView<Eigen::Lower>() * v;
}

Vector CholeskyFactor::multiply_transpose(const Vector& v) const {
  require(v.size() == dim(), ErrorKind::LengthMismatch, "triangular product size mismatch");
  return lower_.transpose().triangularView<Eigen::Upper>() * v;
}

CholeskyFactor cholesky(const SymmetricMatrix& s) {
  require(s.dense().allFinite(), ErrorKind::NotPositiveDefinite, "matrix has non-finite entries");
  Eigen::LLT<Matrix, Eigen::Lower> llt(s.dense());
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NotPositiveDefinite, "a Cholesky pivot was not strictly positive");
  }
  CholeskyFactor f;
  f.lower_ = llt.matrixL();
  if ((f.lower_.diagonal().array() <= 0.0).any()) {
    fail(ErrorKind::NotPositiveDefinite, "a Cholesky pivot was not strictly positive");
  }
  return f;
}

EigenDecomposition eig_sym(const SymmetricMatrix& a) {
  require(a.dense().allFinite(), ErrorKind::NoConvergence, "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.dense(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::NoConvergence, "symmetric eigensolver exceeded its iteration budget");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Vector apply_matrix_function(const EigenDecomposition& eig, const ScalarFunction& f,
                             const Vector& v) {
  require(v.size() == eig.eigenvectors.rows(), ErrorKind::LengthMismatch,
          "matrix function size mismatch");
  Vector coeff = eig.eigenvectors.transpose() * v;
  for (Index i = 0; i < coeff.size(); ++i) coeff(i) *= f(eig.eigenvalues(i));
  return eig.eigenvectors * coeff;
}

Vector apply_matrix_function(const SymmetricMatrix& a, const ScalarFunction& f,
                             const Vector& v) {
  return apply_matrix_function(eig_sym(a), f, v);
}

Matrix matrix_function(const EigenDecomposition& eig, const ScalarFunction& f) {
  Vector fl(eig.eigenvalues.size());
  for (Index i = 0; i < fl.size(); ++i) fl(i) = f(eig.eigenvalues(i));
  return eig.eigenvectors * fl.asDiagonal() * eig.eigenvectors.transpose();
}

double spectral_norm(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::NoConvergence, "symmetric eigensolver exceeded its iteration budget");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sscf
