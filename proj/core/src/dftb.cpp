#include "sscf/dftb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sscf/error.hpp"

namespace sscf::dftb {

OrbitalPartition::OrbitalPartition(std::vector<Index> orbital_counts)
    : counts_(std::move(orbital_counts)) {
  require(!counts_.empty(), ErrorKind::InvalidSystem, "partition needs at least one atom");
  offsets_.reserve(counts_.size());
  for (Index c : counts_) {
    require(c >= 1, ErrorKind::InvalidSystem, "every atom needs at least one orbital");
    offsets_.push_back(total_);
    total_ += c;
  }
}

OrbitalPartition OrbitalPartition::uniform(Index atoms, Index orbitals_per_atom) {
  return OrbitalPartition(std::vector<Index>(static_cast<std::size_t>(atoms), orbitals_per_atom));
}

Index OrbitalPartition::atom_of(Index orbital) const {
  require(orbital >= 0 && orbital < total_, ErrorKind::InvalidArgument, "orbital out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), orbital);
  return static_cast<Index>(std::distance(offsets_.begin(), it)) - 1;
}

Vector OrbitalPartition::expand(const Vector& v) const {
  require(v.size() == atom_count(), ErrorKind::LengthMismatch,
          "expand: vector length must equal the atom count");
  Vector out(total_);
  for (Index j = 0; j < atom_count(); ++j) {
    out.segment(offset(j), count(j)).setConstant(v(j));
  }
  return out;
}

Vector OrbitalPartition::block_sums(const Vector& x) const {
  require(x.size() == total_, ErrorKind::LengthMismatch,
          "block_sums: vector length must equal the orbital count");
  Vector out(atom_count());
  for (Index j = 0; j < atom_count(); ++j) out(j) = x.segment(offset(j), count(j)).sum();
  return out;
}

void TightBindingSystem::validate() const {
  const Index m = partition.total_orbitals();
  const Index n = partition.atom_count();
  require(n >= 1 && m >= n, ErrorKind::InvalidSystem, "partition is empty");
  require(h0.dim() == m, ErrorKind::InvalidSystem, "H0 dimension must equal the orbital count");
  require(s.dim() == m, ErrorKind::InvalidSystem, "S dimension must equal the orbital count");
  require(gamma.dim() == n, ErrorKind::InvalidSystem, "gamma dimension must equal the atom count");
  require(q0.size() == n, ErrorKind::InvalidSystem, "q0 length must equal the atom count");
  require(q0.allFinite() && (q0.array() >= 0.0).all(), ErrorKind::InvalidSystem,
          "q0 entries must be finite and non-negative");
  require(std::isfinite(mu), ErrorKind::InvalidSystem, "mu must be finite");
  require(std::isfinite(beta) && beta > 0.0, ErrorKind::InvalidSystem, "beta must be positive");
  require(h0.dense().allFinite() && gamma.dense().allFinite(), ErrorKind::InvalidSystem,
          "H0 and gamma must be finite");
  (void)cholesky(s);
}

double fermi_dirac(double x, double mu, double beta) {
  const double z = beta * (x - mu);
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 2.0 * e / (1.0 + e);
  }
  return 2.0 / (1.0 + std::exp(z));
}

ChargeModel::ChargeModel(TightBindingSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  factor_ = cholesky(sys_.s);
  // A₀ = L⁻¹ (L⁻¹ H₀)ᵀ since H₀ is symmetric.
  const Matrix x = factor_.solve_lower(sys_.h0.dense());
  const Matrix a0 = factor_.solve_lower(Matrix(x.transpose()));
  a0_ = SymmetricMatrix::symmetrized(a0);
}

ScalarFunction ChargeModel::occupation() const {
  const double mu = sys_.mu;
  const double beta = sys_.beta;
  return [mu, beta](double x) { return fermi_dirac(x, mu, beta); };
}

Vector ChargeModel::orbital_shift(const ChargeVector& q) const {
  require(q.size() == atoms(), ErrorKind::LengthMismatch, "charge vector length mismatch");
  const Vector dq = sys_.q0 - q;
  return sys_.partition.expand(sys_.gamma.dense() * dq);
}

SymmetricMatrix ChargeModel::build_a(const ChargeVector& q) const {
  const Vector d = orbital_shift(q);
  const Matrix& l = factor_.lower();
  // W = L⁻¹ diag(d) L; the diagonal scaling is a row scaling of L.
  const Matrix w = factor_.solve_lower(Matrix(d.asDiagonal() * l));
  const Matrix sym = w + w.transpose();
  return SymmetricMatrix::from_dense(a0_.dense() + 0.5 * sym);
}

krylov::LinearOperator ChargeModel::a_operator(const ChargeVector& q) const {
  Vector d = orbital_shift(q);
  return [this, d = std::move(d)](const Vector& x) -> Vector {
    const Vector wx = factor_.solve_lower(Vector(d.cwiseProduct(factor_.multiply(x))));
    const Vector wtx = factor_.multiply_transpose(Vector(d.cwiseProduct(factor_.solve_upper(x))));
    return a0_.dense() * x + 0.5 * (wx + wtx);
  };
}

ChargeVector ChargeModel::charge_exact(const ChargeVector& q) const {
  const EigenDecomposition eig = eig_sym(build_a(q));
  const auto f = occupation();
  // diag(L Q f(Λ) Qᵀ L⁻¹)_μ = Σ_i (LQ)_{μi} f(λ_i) (L⁻ᵀQ)_{μi}
  const Matrix lq = factor_.lower().triangularView<Eigen::Lower>() * eig.eigenvectors;
  const Matrix ltq = factor_.solve_upper(eig.eigenvectors);
  Vector fl(eig.eigenvalues.size());
  for (Index i = 0; i < fl.size(); ++i) fl(i) = f(eig.eigenvalues(i));
  const Vector diag = (lq.cwiseProduct(ltq)) * fl;
  return sys_.partition.block_sums(diag);
}

ChargeVector ChargeModel::charge_sample_with(const krylov::LinearOperator& op, Index ell,
                                             const Vector& probe) const {
  require(probe.size() == orbitals(), ErrorKind::LengthMismatch, "probe length mismatch");
  const Vector w = factor_.solve_lower(probe);
  const Vector fw = krylov::krylov_apply_f(op, w, std::min(ell, orbitals()), occupation());
  const Vector u = factor_.multiply(fw);
  return sys_.partition.block_sums(u.cwiseProduct(probe));
}

ChargeVector ChargeModel::charge_sample(const ChargeVector& q, Index ell,
                                        const Vector& probe) const {
  require(ell >= 1, ErrorKind::InvalidArgument, "ell must be >= 1");
  return charge_sample_with(a_operator(q), ell, probe);
}

ChargeVector ChargeModel::charge_sample_mean(const ChargeVector& q, Index ell,
                                             estimator::ProbeKind kind, Index n_vec,
                                             const estimator::RngStream& stream) const {
  require(ell >= 1, ErrorKind::InvalidArgument, "ell must be >= 1");
  require(n_vec >= 1, ErrorKind::InvalidArgument, "n_vec must be >= 1");
  const auto op = a_operator(q);
  const estimator::ProbeDistribution dist{kind, orbitals()};
  ChargeVector sum = ChargeVector::Zero(atoms());
  for (Index i = 0; i < n_vec; ++i) {
    const Vector v = estimator::draw_probe(dist, stream.with_sample(static_cast<std::uint64_t>(i)));
    sum += charge_sample_with(op, ell, v);
  }
  return sum / static_cast<double>(n_vec);
}

}  // namespace sscf::dftb
