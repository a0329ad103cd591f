#pragma once

// Lyapunov functionals, stability experiments, Jacobian-based stability
// checks, the companion-matrix equilibrium and iteration-complexity scans.

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "sscf/mixing.hpp"

namespace sscf::diagnostics {

// Σ_{i≥n} aᵢ² split into the directly summed part and an integral-test upper
// bracket for the remainder; value = direct + remainder.
struct TailSum {
  double value = 0.0;
  double direct = 0.0;
  double remainder = 0.0;
};

inline constexpr Index kTailHorizon = 1'000'000;

// DivergentTail for constant schedules or exponent ≤ 1/2.
TailSum squared_tail(const mixing::DampingSchedule& sched, Index n);

// χ_n = Σ_j b_{m−j+1} a²_{n+m−2+j}
double chi(const mixing::DampingSchedule& sched, const std::vector<double>& b, Index n);
// Σ_{i≥n} χᵢ
double chi_tail(const mixing::DampingSchedule& sched, const std::vector<double>& b, Index n);

// ‖e‖² + Ξ Σ_{i≥n} aᵢ²
double lyapunov_simple(const Vector& e, Index n, const mixing::DampingSchedule& sched, double xi);
double lyapunov_simple(const Vector& e, double tail, double xi);

// errors = (e_n, …, e_{n+m−1}), g = (G_n, …, G_{n+m−2}), G = k(q, v) − q.
struct LyapunovWindow {
  std::vector<Vector> errors;
  std::vector<Vector> g;
};

// ‖X_n‖_n + Ξ Σ_{i≥n} χᵢ. WindowMismatch if the window does not match b.
double lyapunov_extended(const LyapunovWindow& window, Index n,
                         const mixing::DampingSchedule& sched, const std::vector<double>& b,
                         double xi);
// Same with Σ_{i≥n} χᵢ supplied.
double lyapunov_extended(const LyapunovWindow& window, Index n,
                         const mixing::DampingSchedule& sched, const std::vector<double>& b,
                         double xi, double chi_tail_value);

using VectorMap = std::function<Vector(const Vector&)>;

// Column j = (K(q + h eⱼ) − K(q − h eⱼ)) / 2h.
Matrix jacobian_fd(const VectorMap& map, const Vector& q, double h = 1e-3);

std::vector<std::complex<double>> eigenvalues(const Matrix& m);

struct ThetaMax {
  double value = 0.0;
  bool violated = false;  // some eigenvalue has Re λ ≥ 1
};

// min over λ of 2(1 − Re λ)/|1 − λ|².
ThetaMax theta_max(const std::vector<std::complex<double>>& eigs);

// max |1 − θ + θλ|
double damped_spectral_radius(const std::vector<std::complex<double>>& eigs, double theta);

// First row (b_m, …, b₁), ones on the subdiagonal.
Matrix companion_matrix(const std::vector<double>& b);

struct CompanionEquilibrium {
  Vector pi;                  // πB = π, Σπ = 1
  double convergence_error;   // ‖B²⁵⁶ − 𝟙πᵀ‖_max
};

// InvalidCoefficients unless Σb = 1, b ≥ 0, b₁ > 0, b_m > 0.
CompanionEquilibrium companion_equilibrium(const std::vector<double>& b);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// 1.5 × the largest mean ‖k(q, v) − K(q)‖² over n_points points drawn
// uniformly from the ball B(q*, ρ). Requires an exact evaluator.
double estimate_xi(const mixing::FixedPointProblem& problem, const Vector& q_star, double rho,
                   std::uint64_t seed, Index n_points = 20, Index samples_per_point = 200);

struct StabilityReport {
  double rho = 0.0;
  Index paths = 0;
  Index path_length = 0;
  Index exits = 0;
  double exit_fraction = 0.0;
  double std_error = 0.0;  // √(p(1 − p)/paths)
  double bound = 0.0;      // mean over paths of V₁/ρ²
  double xi = 0.0;
  std::vector<double> final_errors;
};

// Each path runs cfg with seed derive_seed(seed, path) for path_length steps
// from `warm_start`; it exits when ‖e_n‖₂ > ρ for some n ≥ m + 1 (n ≥ 1 when
// m = 1). Paths run concurrently, results are gathered in path order.
StabilityReport stability_monte_carlo(const mixing::FixedPointProblem& problem,
                                      const mixing::MixingConfig& cfg, double rho,
                                      const Vector& q_star, const std::vector<Vector>& warm_start,
                                      Index n_paths, Index path_length, double xi,
                                      std::uint64_t seed);

struct SupermartingaleReport {
  Index n = 0;
  Index paths = 0;       // paths that stayed in the ball
  double mean_increment = 0.0;
  double std_error = 0.0;
};

// Mean of V_{n+1} − V_n over paths that stay inside B(q*, ρ) up to step n + m.
SupermartingaleReport supermartingale_trend(const mixing::FixedPointProblem& problem,
                                            const mixing::MixingConfig& cfg, double rho,
                                            const Vector& q_star,
                                            const std::vector<Vector>& warm_start, Index n_paths,
                                            Index n, double xi, std::uint64_t seed);

enum class Candidate { LastIterate, Averaged };

struct ComplexityReport {
  Candidate candidate = Candidate::Averaged;
  std::vector<double> epsilons;
  std::vector<std::uint64_t> seeds;
  // iterations[s][k]: steps until the candidate is within ε_k of q*; −1 if
  // not reached within cfg.max_iter.
  std::vector<std::vector<Index>> iterations;
  Index censored = 0;
  // LastIterate: iterations ~ log(1/ε); Averaged: log(iterations) ~ log(1/ε).
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double predicted_slope = 0.0;  // 2/(1 − β_d) for Averaged, 0 otherwise
  Index points = 0;
};

ComplexityReport complexity_scan(const mixing::FixedPointProblem& problem,
                                 const mixing::MixingConfig& cfg, const Vector& q_star,
                                 const std::vector<Vector>& warm_start,
                                 std::vector<double> epsilons,
                                 const std::vector<std::uint64_t>& seeds, Candidate candidate);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sscf::diagnostics
