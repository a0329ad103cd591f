#pragma once

// Stochastic fixed-point drivers: damping schedules, simple / linear /
// Anderson mixing, the averaged iterate and trace recording.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sscf/estimator.hpp"
#include "sscf/matkit.hpp"

namespace sscf::mixing {

enum class DampingForm { PowerCap, Constant };

// a_n = min{a / (offset + scale·n^exponent), cap}, or a_n = a when constant.
struct DampingSchedule {
  DampingForm form = DampingForm::PowerCap;
  double a = 1.0;
  double exponent = 1.0;
  double offset = 50.0;
  double scale = 2.0;
  double cap = 0.005;

  static DampingSchedule power_cap(double a, double offset, double scale, double exponent,
                                   double cap);
  static DampingSchedule constant(double a);
  // min{(50 + 2n)⁻¹, 0.005}
  static DampingSchedule linear_default();
  // [50 + 4n^{3/4}]⁻¹, effectively uncapped
  static DampingSchedule anderson_default();

  void validate() const;  // InvalidArgument
};

double damping_at(const DampingSchedule& sched, Index n);

enum class Scheme { Simple, Linear, Anderson };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& s);  // InvalidArgument

struct MixingConfig {
  Scheme scheme = Scheme::Simple;
  Index depth = 1;                    // m
  std::vector<double> coefficients;   // b₁..b_m, linear only; empty means uniform
  DampingSchedule damping = DampingSchedule::linear_default();
  double anderson_regularization = -1.0;  // < 0: 1e-8·max‖gᵢ‖²
  Index n_vec = 1;
  Index ell = 20;
  Index max_iter = 1000;
  std::uint64_t seed = 0;
  Index warmup_steps = 0;   // simple-mixing steps before the scheme starts
  Index block_size = 1000;
  double tol = 0.0;         // > 0 enables the block-averaged residual stop

  void validate() const;  // InvalidArgument / InvalidCoefficients
  // The b used by the linear update and by the averaged-iterate weights.
  std::vector<double> effective_coefficients() const;
};

// q = K(q) = E[k(q, v)].
class FixedPointProblem {
 public:
  virtual ~FixedPointProblem() = default;
  virtual Index dimension() const = 0;
  virtual bool has_exact() const { return false; }
  virtual Vector exact(const Vector& q) const;  // InvalidArgument unless has_exact()
  // Mean of n_vec samples drawn from stream.with_sample(0..n_vec−1).
  virtual Vector sample(const Vector& q, const estimator::RngStream& stream, Index n_vec) const = 0;
};

Vector simple_mixing_step(const Vector& q, const Vector& k_val, double a);

// (1−a)·Σ bᵢ historyᵢ + a·Σ bᵢ samplesᵢ, oldest entry first.
Vector linear_mixing_step(const std::vector<Vector>& history, const std::vector<Vector>& samples,
                          const std::vector<double>& b, double a);

// argmin ‖Σ bᵢgᵢ‖² + λ‖b − u‖² subject to Σ bᵢ = 1; uniform when singular.
std::vector<double> anderson_coefficients(const std::vector<Vector>& residuals,
                                          double regularization);

struct StepRecord {
  Index n = 0;
  Vector q;               // input iterate q_n
  Vector k;               // sampled k(q_n, v_n)
  double a = 0.0;         // a_n, the damping that produced q_{n+1}
  double residual_inf = 0.0;
  std::vector<double> b;  // empty on warm-up steps
  double wall_ms = 0.0;
};

struct IterationTrace {
  MixingConfig config;
  std::vector<StepRecord> steps;
  Vector final_iterate;
  bool stopped_on_tol = false;

  Index size() const noexcept { return static_cast<Index>(steps.size()); }
};

// One iteration at a time; the iteration is a Markov chain so state is only
// the ring buffers and the current iterate.
class Mixer {
 public:
  // warm_start holds 1..m iterates; missing ones are produced by simple mixing.
  Mixer(const FixedPointProblem& problem, MixingConfig cfg, std::vector<Vector> warm_start);

  // Samples at the current iterate, advances it, and returns the record for
  // step n (wall_ms left at zero). NonFiniteIterate if the new iterate is not
  // finite.
  StepRecord step();

  Index next_index() const noexcept { return n_; }
  const Vector& current() const noexcept { return q_; }
  const MixingConfig& config() const noexcept { return cfg_; }

 private:
  const FixedPointProblem& problem_;
  MixingConfig cfg_;
  std::vector<double> b_;
  std::vector<Vector> pending_;
  std::vector<Vector> hist_q_;
  std::vector<Vector> hist_k_;
  Vector q_;
  Index n_ = 1;
};

// Runs max_iter steps (or until the tolerance rule fires) and appends to
// `trace`, which stays valid if NonFiniteIterate is thrown.
void run(const FixedPointProblem& problem, const MixingConfig& cfg,
         const std::vector<Vector>& warm_start, IterationTrace& trace);
IterationTrace run(const FixedPointProblem& problem, const MixingConfig& cfg,
                   const std::vector<Vector>& warm_start);

// A_n = Σ_j b_{m−j+1} a_{n+m−2+j}.
double averaging_weight(const DampingSchedule& sched, const std::vector<double>& b, Index n);

// Σ A_n q_n / Σ A_n over the recorded iterates. EmptyTrace.
Vector averaged_iterate(const IterationTrace& trace, const MixingConfig& cfg);

// Mean iterate of each consecutive block (the last block may be partial).
std::vector<Vector> block_means(const IterationTrace& trace, Index block_size);

}  // namespace sscf::mixing
