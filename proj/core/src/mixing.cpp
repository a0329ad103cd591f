#include "sscf/mixing.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "sscf/error.hpp"

namespace sscf::mixing {

DampingSchedule DampingSchedule::power_cap(double a, double offset, double scale, double exponent,
                                           double cap) {
  DampingSchedule s;
  s.form = DampingForm::PowerCap;
  s.a = a;
  s.offset = offset;
  s.scale = scale;
  s.exponent = exponent;
  s.cap = cap;
  return s;
}

DampingSchedule DampingSchedule::constant(double a) {
  DampingSchedule s;
  s.form = DampingForm::Constant;
  s.a = a;
  s.cap = a;
  return s;
}

DampingSchedule DampingSchedule::linear_default() { return power_cap(1.0, 50.0, 2.0, 1.0, 0.005); }

DampingSchedule DampingSchedule::anderson_default() {
  return power_cap(1.0, 50.0, 4.0, 0.75, 1.0);
}

void DampingSchedule::validate() const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::InvalidArgument, "damping: " + what);
  };
  check(std::isfinite(a) && a > 0.0, "a must be > 0");
  if (form == DampingForm::Constant) {
    check(a <= 1.0, "constant damping must lie in (0, 1]");
    return;
  }
  check(std::isfinite(exponent) && exponent > 0.5 && exponent <= 1.0,
        "exponent must lie in (1/2, 1]");
  check(std::isfinite(offset) && offset >= 0.0, "offset must be >= 0");
  check(std::isfinite(scale) && scale > 0.0, "scale must be > 0");
  check(std::isfinite(cap) && cap > 0.0 && cap <= 1.0, "cap must lie in (0, 1]");
}

double damping_at(const DampingSchedule& sched, Index n) {
  if (sched.form == DampingForm::Constant) return sched.a;
  const double denom =
      sched.offset + sched.scale * std::pow(static_cast<double>(n), sched.exponent);
  return std::min(sched.a / denom, sched.cap);
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Simple: return "simple";
    case Scheme::Linear: return "linear";
    case Scheme::Anderson: return "anderson";
  }
  return "simple";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "simple") return Scheme::Simple;
  if (s == "linear") return Scheme::Linear;
  if (s == "anderson") return Scheme::Anderson;
  fail(ErrorKind::InvalidArgument, "unknown scheme '" + s + "'");
}

void MixingConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::InvalidArgument, what);
  };
  check(depth >= 1, "depth must be >= 1");
  check(scheme != Scheme::Simple || depth == 1, "simple mixing has depth 1");
  check(n_vec >= 1, "n_vec must be >= 1");
  check(ell >= 1, "ell must be >= 1");
  check(max_iter >= 0, "max_iter must be >= 0");
  check(warmup_steps >= 0, "warmup_steps must be >= 0");
  check(block_size >= 1, "block_size must be >= 1");
  check(std::isfinite(tol) && tol >= 0.0, "tol must be >= 0");
  check(std::isfinite(anderson_regularization), "anderson_regularization must be finite");
  damping.validate();
  if (!coefficients.empty()) {
    require(scheme == Scheme::Linear, ErrorKind::InvalidCoefficients,
            "coefficients apply to linear mixing only");
    require(static_cast<Index>(coefficients.size()) == depth, ErrorKind::InvalidCoefficients,
            "need exactly m coefficients");
    double sum = 0.0;
    for (double b : coefficients) {
      require(std::isfinite(b) && b >= 0.0, ErrorKind::InvalidCoefficients,
              "coefficients must be non-negative");
      sum += b;
    }
    require(coefficients.back() > 0.0, ErrorKind::InvalidCoefficients, "b_m must be positive");
    require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::InvalidCoefficients,
            "coefficients must sum to 1");
  }
}

std::vector<double> MixingConfig::effective_coefficients() const {
  if (scheme == Scheme::Simple) return {1.0};
  if (scheme == Scheme::Linear && !coefficients.empty()) return coefficients;
  return std::vector<double>(static_cast<std::size_t>(depth), 1.0 / static_cast<double>(depth));
}

Vector FixedPointProblem::exact(const Vector&) const {
  fail(ErrorKind::InvalidArgument, "problem has no exact evaluator");
}

Vector simple_mixing_step(const Vector& q, const Vector& k_val, double a) {
  require(q.size() == k_val.size(), ErrorKind::LengthMismatch, "iterate/sample length mismatch");
  return (1.0 - a) * q + a * k_val;
}

Vector linear_mixing_step(const std::vector<Vector>& history, const std::vector<Vector>& samples,
                          const std::vector<double>& b, double a) {
  require(!b.empty() && history.size() == b.size() && samples.size() == b.size(),
          ErrorKind::HistoryLengthMismatch, "history, samples and b must all have length m");
  Vector bq = b[0] * history[0];
  Vector bk = b[0] * samples[0];
  for (std::size_t i = 1; i < b.size(); ++i) {
    bq += b[i] * history[i];
    bk += b[i] * samples[i];
  }
  return (1.0 - a) * bq + a * bk;
}

std::vector<double> anderson_coefficients(const std::vector<Vector>& residuals,
                                          double regularization) {
  const Index m = static_cast<Index>(residuals.size());
  require(m >= 1, ErrorKind::InvalidArgument, "anderson: need at least one residual");
  const std::vector<double> uniform(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
  if (m == 1) return {1.0};

  const Vector& gm = residuals.back();
  Matrix d(gm.size(), m - 1);
  double gmax = gm.squaredNorm();
  for (Index i = 0; i + 1 < m; ++i) {
    d.col(i) = residuals[static_cast<std::size_t>(i)] - gm;
    gmax = std::max(gmax, residuals[static_cast<std::size_t>(i)].squaredNorm());
  }
  const double lambda = regularization < 0.0 ? 1e-8 * gmax : regularization;

  // b_i = β_i (i < m), b_m = 1 − Σβ:
  // (DᵀD + λI + λ11ᵀ) β = −Dᵀ g_m + λ1
  Matrix g = d.transpose() * d;
  g.diagonal().array() += lambda;
  g.array() += lambda;
  Vector rhs = -d.transpose() * gm;
  rhs.array() += lambda;

  const double gnorm = g.cwiseAbs().maxCoeff();
  if (!(gnorm > 0.0) || !rhs.allFinite()) return uniform;
  Eigen::LDLT<Matrix> ldlt(g);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) return uniform;
  const Vector beta = ldlt.solve(rhs);
  if (!beta.allFinite()) return uniform;

  std::vector<double> b(static_cast<std::size_t>(m));
  double partial = 0.0;
  for (Index i = 0; i + 1 < m; ++i) {
    b[static_cast<std::size_t>(i)] = beta(i);
    partial += beta(i);
  }
  b.back() = 1.0 - partial;
  return b;
}

Mixer::Mixer(const FixedPointProblem& problem, MixingConfig cfg, std::vector<Vector> warm_start)
    : problem_(problem), cfg_(std::move(cfg)) {
  cfg_.validate();
  b_ = cfg_.effective_coefficients();
  require(!warm_start.empty(), ErrorKind::InvalidArgument, "warm start needs an iterate");
  require(warm_start.size() <= b_.size(), ErrorKind::InvalidArgument,
          "warm start holds at most m iterates");
  for (const Vector& q : warm_start) {
    require(q.size() == problem_.dimension(), ErrorKind::LengthMismatch,
            "warm-start iterate has the wrong dimension");
    require(q.allFinite(), ErrorKind::NonFiniteIterate, "warm-start iterate is not finite");
  }
  q_ = std::move(warm_start.front());
  pending_.assign(std::make_move_iterator(warm_start.begin() + 1),
                  std::make_move_iterator(warm_start.end()));
}

StepRecord Mixer::step() {
  const std::size_t m = b_.size();
  StepRecord rec;
  rec.n = n_;
  rec.q = q_;
  rec.k = problem_.sample(q_, estimator::RngStream{cfg_.seed, static_cast<std::uint64_t>(n_), 0},
                          cfg_.n_vec);
  require(rec.k.size() == q_.size(), ErrorKind::LengthMismatch, "sample has the wrong dimension");
  rec.a = damping_at(cfg_.damping, n_);
  rec.residual_inf = (rec.k - rec.q).lpNorm<Eigen::Infinity>();

  hist_q_.push_back(rec.q);
  hist_k_.push_back(rec.k);
  if (hist_q_.size() > m) {
    hist_q_.erase(hist_q_.begin());
    hist_k_.erase(hist_k_.begin());
  }

  Vector next;
  if (!pending_.empty()) {
    next = std::move(pending_.front());
    pending_.erase(pending_.begin());
  } else if (cfg_.scheme == Scheme::Simple || hist_q_.size() < m || n_ <= cfg_.warmup_steps) {
    next = simple_mixing_step(rec.q, rec.k, rec.a);
  } else if (cfg_.scheme == Scheme::Linear) {
    next = linear_mixing_step(hist_q_, hist_k_, b_, rec.a);
    rec.b = b_;
  } else {
    std::vector<Vector> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = hist_k_[i] - hist_q_[i];
    rec.b = anderson_coefficients(g, cfg_.anderson_regularization);
    next = linear_mixing_step(hist_q_, hist_k_, rec.b, rec.a);
  }
  require(next.allFinite() && rec.k.allFinite(), ErrorKind::NonFiniteIterate,
          "iterate became non-finite at step " + std::to_string(n_));
  q_ = std::move(next);
  ++n_;
  return rec;
}

namespace {

// Inf-norm of the mean residual k − q over steps [begin, end).
double block_residual(const std::vector<StepRecord>& steps, std::size_t begin, std::size_t end) {
  Vector sum = Vector::Zero(steps[begin].q.size());
  for (std::size_t i = begin; i < end; ++i) sum += steps[i].k - steps[i].q;
  return (sum / static_cast<double>(end - begin)).lpNorm<Eigen::Infinity>();
}

}  // namespace

void run(const FixedPointProblem& problem, const MixingConfig& cfg,
         const std::vector<Vector>& warm_start, IterationTrace& trace) {
  Mixer mixer(problem, cfg, warm_start);
  trace.config = cfg;
  trace.final_iterate = mixer.current();
  const auto block = static_cast<std::size_t>(cfg.block_size);
  for (Index i = 0; i < cfg.max_iter; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec = mixer.step();
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    trace.steps.push_back(std::move(rec));
    trace.final_iterate = mixer.current();

    const std::size_t t = trace.steps.size();
    if (cfg.tol > 0.0 && t % block == 0 && t >= 2 * block &&
        block_residual(trace.steps, t - 2 * block, t - block) < cfg.tol &&
        block_residual(trace.steps, t - block, t) < cfg.tol) {
      trace.stopped_on_tol = true;
      break;
    }
  }
}

IterationTrace run(const FixedPointProblem& problem, const MixingConfig& cfg,
                   const std::vector<Vector>& warm_start) {
  IterationTrace trace;
  run(problem, cfg, warm_start, trace);
  return trace;
}

double averaging_weight(const DampingSchedule& sched, const std::vector<double>& b, Index n) {
  const Index m = static_cast<Index>(b.size());
  double w = 0.0;
  for (Index j = 1; j <= m; ++j) {
    w += b[static_cast<std::size_t>(m - j)] * damping_at(sched, n + m - 2 + j);
  }
  return w;
}

Vector averaged_iterate(const IterationTrace& trace, const MixingConfig& cfg) {
  require(!trace.steps.empty(), ErrorKind::EmptyTrace, "averaged_iterate: empty trace");
  const std::vector<double> b = cfg.effective_coefficients();
  Vector sum = Vector::Zero(trace.steps.front().q.size());
  double total = 0.0;
  for (const StepRecord& rec : trace.steps) {
    const double w = averaging_weight(cfg.damping, b, rec.n);
    sum += w * rec.q;
    total += w;
  }
  return sum / total;
}

std::vector<Vector> block_means(const IterationTrace& trace, Index block_size) {
  require(!trace.steps.empty(), ErrorKind::EmptyTrace, "block_means: empty trace");
  require(block_size >= 1, ErrorKind::InvalidArgument, "block size must be >= 1");
  std::vector<Vector> out;
  const auto bs = static_cast<std::size_t>(block_size);
  for (std::size_t begin = 0; begin < trace.steps.size(); begin += bs) {
    const std::size_t end = std::min(begin + bs, trace.steps.size());
    Vector sum = Vector::Zero(trace.steps[begin].q.size());
    for (std::size_t i = begin; i < end; ++i) sum += trace.steps[i].q;
    out.push_back(sum / static_cast<double>(end - begin));
  }
  return out;
}

}  // namespace sscf::mixing
