#pragma once

// Concrete fixed-point problems: an affine map with bounded additive noise and
// the charge map of a tight-binding system.

#include "sscf/dftb.hpp"
#include "sscf/mixing.hpp"

namespace sscf::problems {

// K(q) = M q + c, k(q, v) = K(q) + σ v with v uniform on {−1, +1}^N.
class AffineNoisyProblem final : public mixing::FixedPointProblem {
 public:
  AffineNoisyProblem(Matrix m, Vector c, double sigma);

  // K(q) = 0.5 q in one dimension.
  static AffineNoisyProblem scalar_half(double sigma);

  Index dimension() const override { return c_.size(); }
  bool has_exact() const override { return true; }
  Vector exact(const Vector& q) const override;
  Vector sample(const Vector& q, const estimator::RngStream& stream, Index n_vec) const override;

  // (I − M)⁻¹ c
  Vector fixed_point() const;
  const Matrix& matrix() const noexcept { return m_; }
  double sigma() const noexcept { return sigma_; }

 private:
  Matrix m_;
  Vector c_;
  double sigma_;
};

// ±1 derived from a hash of (stream, entry); cheap enough for long scalar runs.
double rademacher_sign(const estimator::RngStream& stream, Index entry);

class DftbProblem final : public mixing::FixedPointProblem {
 public:
  DftbProblem(const dftb::ChargeModel& model, Index ell,
              estimator::ProbeKind kind = estimator::ProbeKind::Rademacher);

  Index dimension() const override { return model_.atoms(); }
  bool has_exact() const override { return true; }
  Vector exact(const Vector& q) const override { return model_.charge_exact(q); }
  Vector sample(const Vector& q, const estimator::RngStream& stream, Index n_vec) const override;

 private:
  const dftb::ChargeModel& model_;
  Index ell_;
  estimator::ProbeKind kind_;
};

}  // namespace sscf::problems
