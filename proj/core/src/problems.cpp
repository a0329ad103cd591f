#include "sscf/problems.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "sscf/error.hpp"

namespace sscf::problems {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double rademacher_sign(const estimator::RngStream& stream, Index entry) {
  std::uint64_t h = splitmix64(stream.master_seed);
  h = splitmix64(h ^ stream.iteration_index);
  h = splitmix64(h ^ stream.sample_index);
  h = splitmix64(h ^ static_cast<std::uint64_t>(entry));
  return (h >> 63) != 0 ? -1.0 : 1.0;
}

AffineNoisyProblem::AffineNoisyProblem(Matrix m, Vector c, double sigma)
    : m_(std::move(m)), c_(std::move(c)), sigma_(sigma) {
  require(m_.rows() == m_.cols() && m_.rows() == c_.size() && c_.size() >= 1,
          ErrorKind::LengthMismatch, "affine problem: inconsistent dimensions");
  require(std::isfinite(sigma_) && sigma_ >= 0.0, ErrorKind::InvalidArgument,
          "affine problem: sigma must be >= 0");
}

AffineNoisyProblem AffineNoisyProblem::scalar_half(double sigma) {
  return AffineNoisyProblem(Matrix::Constant(1, 1, 0.5), Vector::Zero(1), sigma);
}

Vector AffineNoisyProblem::exact(const Vector& q) const {
  require(q.size() == c_.size(), ErrorKind::LengthMismatch, "affine problem: wrong dimension");
  return m_ * q + c_;
}

Vector AffineNoisyProblem::sample(const Vector& q, const estimator::RngStream& stream,
                                  Index n_vec) const {
  Vector out = exact(q);
  if (sigma_ == 0.0) return out;
  Vector noise = Vector::Zero(out.size());
  for (Index s = 0; s < n_vec; ++s) {
    const auto sub = stream.with_sample(static_cast<std::uint64_t>(s));
    for (Index i = 0; i < out.size(); ++i) noise(i) += rademacher_sign(sub, i);
  }
  return out + (sigma_ / static_cast<double>(n_vec)) * noise;
}

Vector AffineNoisyProblem::fixed_point() const {
  const Matrix a = Matrix::Identity(m_.rows(), m_.cols()) - m_;
  return a.fullPivLu().solve(c_);
}

DftbProblem::DftbProblem(const dftb::ChargeModel& model, Index ell, estimator::ProbeKind kind)
    : model_(model), ell_(ell), kind_(kind) {
  require(ell_ >= 1, ErrorKind::InvalidArgument, "ell must be >= 1");
}

Vector DftbProblem::sample(const Vector& q, const estimator::RngStream& stream,
                           Index n_vec) const {
  return model_.charge_sample_mean(q, ell_, kind_, n_vec, stream);
}

}  // namespace sscf::problems
