#include "sscf/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <Eigen/Dense>

#include "sscf/error.hpp"

namespace sscf::diagnostics {

namespace {

using mixing::DampingForm;
using mixing::DampingSchedule;
using mixing::FixedPointProblem;
using mixing::Mixer;
using mixing::MixingConfig;
using mixing::StepRecord;

// Runs body(i) for i in [0, count) on a small pool; the first exception is
// rethrown after all workers finish.
template <class Body>
void parallel_for(Index count, Body body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<Index>(count, hw));
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto loop = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::mt19937_64 seeded_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

std::size_t depth_of(const std::vector<double>& b) { return b.size(); }

}  // namespace

TailSum squared_tail(const DampingSchedule& sched, Index n) {
  require(n >= 1, ErrorKind::InvalidArgument, "tail index must be >= 1");
  require(sched.form == DampingForm::PowerCap && sched.exponent > 0.5, ErrorKind::DivergentTail,
          "sum of squared damping diverges for this schedule");
  TailSum t;
  Index i = n;
  for (; i < n + kTailHorizon; ++i) {
    const double a = mixing::damping_at(sched, i);
    const double term = a * a;
    t.direct += term;
    if (term < 1e-16 * t.direct) {
      ++i;
      break;
    }
  }
  // Σ_{j≥i} a_j² ≤ ∫_{i−1}^∞ a² / (scale² x^{2β}) dx
  const double p = 2.0 * sched.exponent;
  const double x0 = static_cast<double>(i - 1);
  t.remainder = x0 > 0.0 ? sched.a * sched.a * std::pow(x0, 1.0 - p) /
                               (sched.scale * sched.scale * (p - 1.0))
                         : 0.0;
  t.value = t.direct + t.remainder;
  return t;
}

double chi(const DampingSchedule& sched, const std::vector<double>& b, Index n) {
  const Index m = static_cast<Index>(depth_of(b));
  double s = 0.0;
  for (Index j = 1; j <= m; ++j) {
    const double a = mixing::damping_at(sched, n + m - 2 + j);
    s += b[static_cast<std::size_t>(m - j)] * a * a;
  }
  return s;
}

double chi_tail(const DampingSchedule& sched, const std::vector<double>& b, Index n) {
  const Index m = static_cast<Index>(depth_of(b));
  double s = 0.0;
  for (Index j = 1; j <= m; ++j) {
    s += b[static_cast<std::size_t>(m - j)] * squared_tail(sched, n + m - 2 + j).value;
  }
  return s;
}

double lyapunov_simple(const Vector& e, double tail, double xi) {
  return e.squaredNorm() + xi * tail;
}

double lyapunov_simple(const Vector& e, Index n, const DampingSchedule& sched, double xi) {
  return lyapunov_simple(e, xi == 0.0 ? 0.0 : squared_tail(sched, n).value, xi);
}

double lyapunov_extended(const LyapunovWindow& w, Index n, const DampingSchedule& sched,
                         const std::vector<double>& b, double xi, double chi_tail_value) {
  const Index m = static_cast<Index>(b.size());
  require(m >= 1 && static_cast<Index>(w.errors.size()) == m &&
              static_cast<Index>(w.g.size()) == m - 1,
          ErrorKind::WindowMismatch, "window needs m errors and m − 1 G values");
  auto e = [&](Index k) -> const Vector& { return w.errors[static_cast<std::size_t>(k - n)]; };
  auto g = [&](Index k) -> const Vector& { return w.g[static_cast<std::size_t>(k - n)]; };
  double v = e(n + m - 1).squaredNorm();
  for (Index j = 2; j <= m; ++j) {
    const double a = mixing::damping_at(sched, n + m - 3 + j);
    for (Index i = j; i <= m; ++i) {
      const Index k = n + j - 2 + m - i;
      v += b[static_cast<std::size_t>(m - i)] * (e(k) + a * g(k)).squaredNorm();
    }
  }
  return v + xi * chi_tail_value;
}

double lyapunov_extended(const LyapunovWindow& w, Index n, const DampingSchedule& sched,
                         const std::vector<double>& b, double xi) {
  return lyapunov_extended(w, n, sched, b, xi, xi == 0.0 ? 0.0 : chi_tail(sched, b, n));
}

Matrix jacobian_fd(const VectorMap& map, const Vector& q, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorKind::InvalidArgument, "step must be > 0");
  const Index n = q.size();
  Matrix j;
  for (Index c = 0; c < n; ++c) {
    Vector plus = q;
    Vector minus = q;
    plus(c) += h;
    minus(c) -= h;
    const Vector col = (map(plus) - map(minus)) / (2.0 * h);
    if (c == 0) j.resize(col.size(), n);
    j.col(c) = col;
  }
  return j;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  require(es.info() == Eigen::Success, ErrorKind::NoConvergence, "eigenvalue solver failed");
  const auto ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

ThetaMax theta_max(const std::vector<std::complex<double>>& eigs) {
  ThetaMax out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& l : eigs) {
    if (l.real() >= 1.0) return {0.0, true};
    out.value = std::min(out.value, 2.0 * (1.0 - l.real()) / std::norm(1.0 - l));
  }
  return out;
}

double damped_spectral_radius(const std::vector<std::complex<double>>& eigs, double theta) {
  double r = 0.0;
  for (const auto& l : eigs) r = std::max(r, std::abs(1.0 - theta + theta * l));
  return r;
}

Matrix companion_matrix(const std::vector<double>& b) {
  const Index m = static_cast<Index>(b.size());
  require(m >= 1, ErrorKind::InvalidCoefficients, "need at least one coefficient");
  Matrix c = Matrix::Zero(m, m);
  for (Index j = 0; j < m; ++j) c(0, j) = b[static_cast<std::size_t>(m - 1 - j)];
  for (Index i = 1; i < m; ++i) c(i, i - 1) = 1.0;
  return c;
}

CompanionEquilibrium companion_equilibrium(const std::vector<double>& b) {
  require(!b.empty(), ErrorKind::InvalidCoefficients, "need at least one coefficient");
  double sum = 0.0;
  for (double x : b) {
    require(std::isfinite(x) && x >= 0.0, ErrorKind::InvalidCoefficients,
            "coefficients must be non-negative");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::InvalidCoefficients,
          "coefficients must sum to 1");
  require(b.front() > 0.0 && b.back() > 0.0, ErrorKind::InvalidCoefficients,
          "b_1 and b_m must be positive");

  const Index m = static_cast<Index>(b.size());
  // π_j ∝ b₁ + … + b_{m−j}
  Vector pi(m);
  double partial = 0.0;
  for (Index j = m - 1; j >= 0; --j) {
    partial += b[static_cast<std::size_t>(m - 1 - j)];
    pi(j) = partial;
  }
  pi /= pi.sum();

  Matrix p = companion_matrix(b);
  for (int k = 0; k < 8; ++k) p = p * p;
  const Matrix limit = Vector::Ones(m) * pi.transpose();
  return {pi, (p - limit).cwiseAbs().maxCoeff()};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double estimate_xi(const FixedPointProblem& problem, const Vector& q_star, double rho,
                   std::uint64_t seed, Index n_points, Index samples_per_point) {
  require(problem.has_exact(), ErrorKind::InvalidArgument, "estimate_xi needs an exact map");
  require(rho > 0.0 && n_points >= 1 && samples_per_point >= 1, ErrorKind::InvalidArgument,
          "estimate_xi: invalid arguments");
  const Index dim = q_star.size();
  double worst = 0.0;
  for (Index p = 0; p < n_points; ++p) {
    const std::uint64_t ps = derive_seed(seed, static_cast<std::uint64_t>(p));
    auto rng = seeded_engine(ps);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    Vector dir(dim);
    for (Index i = 0; i < dim; ++i) dir(i) = normal(rng);
    const double r = rho * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
    const Vector q = q_star + r * dir / dir.norm();
    const Vector k = problem.exact(q);
    double acc = 0.0;
    for (Index s = 0; s < samples_per_point; ++s) {
      acc += (problem.sample(q, estimator::RngStream{ps, static_cast<std::uint64_t>(s), 0}, 1) - k)
                 .squaredNorm();
    }
    worst = std::max(worst, acc / static_cast<double>(samples_per_point));
  }
  return 1.5 * worst;
}

StabilityReport stability_monte_carlo(const FixedPointProblem& problem, const MixingConfig& cfg,
                                      double rho, const Vector& q_star,
                                      const std::vector<Vector>& warm_start, Index n_paths,
                                      Index path_length, double xi, std::uint64_t seed) {
  require(n_paths >= 1, ErrorKind::InvalidArgument, "need at least one path");
  require(rho > 0.0, ErrorKind::InvalidArgument, "rho must be > 0");
  cfg.validate();
  const std::vector<double> b = cfg.effective_coefficients();
  const Index m = static_cast<Index>(b.size());
  require(path_length >= m, ErrorKind::InvalidArgument, "path shorter than the mixing depth");
  const Index first_checked = m == 1 ? 1 : m + 1;
  const double tail = xi == 0.0 ? 0.0
                      : m == 1  ? squared_tail(cfg.damping, 1).value
                                : chi_tail(cfg.damping, b, 1);

  std::vector<char> exited(static_cast<std::size_t>(n_paths), 0);
  std::vector<double> v1(static_cast<std::size_t>(n_paths), 0.0);
  std::vector<double> final_err(static_cast<std::size_t>(n_paths), 0.0);

  parallel_for(n_paths, [&](Index path) {
    MixingConfig pc = cfg;
    pc.seed = derive_seed(seed, static_cast<std::uint64_t>(path));
    Mixer mixer(problem, pc, warm_start);
    LyapunovWindow window;
    bool out = false;
    try {
      for (Index s = 0; s < path_length; ++s) {
        const StepRecord rec = mixer.step();
        const Vector e = rec.q - q_star;
        if (rec.n <= m) window.errors.push_back(e);
        if (rec.n < m) window.g.push_back(rec.k - rec.q);
        if (rec.n >= first_checked && e.norm() > rho) out = true;
      }
      if ((mixer.current() - q_star).norm() > rho) out = true;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NonFiniteIterate) throw;
      out = true;
    }
    const auto i = static_cast<std::size_t>(path);
    exited[i] = out ? 1 : 0;
    final_err[i] = (mixer.current() - q_star).norm();
    v1[i] = m == 1 ? lyapunov_simple(window.errors.front(), tail, xi)
                   : lyapunov_extended(window, 1, cfg.damping, b, xi, tail);
  });

  StabilityReport rep;
  rep.rho = rho;
  rep.paths = n_paths;
  rep.path_length = path_length;
  rep.xi = xi;
  double vsum = 0.0;
  for (Index p = 0; p < n_paths; ++p) {
    rep.exits += exited[static_cast<std::size_t>(p)];
    vsum += v1[static_cast<std::size_t>(p)];
  }
  const double np = static_cast<double>(n_paths);
  rep.exit_fraction = static_cast<double>(rep.exits) / np;
  rep.std_error = std::sqrt(rep.exit_fraction * (1.0 - rep.exit_fraction) / np);
  rep.bound = vsum / np / (rho * rho);
  rep.final_errors = std::move(final_err);
  return rep;
}

SupermartingaleReport supermartingale_trend(const FixedPointProblem& problem,
                                            const MixingConfig& cfg, double rho,
                                            const Vector& q_star,
                                            const std::vector<Vector>& warm_start, Index n_paths,
                                            Index n, double xi, std::uint64_t seed) {
  require(n_paths >= 1 && n >= 1 && rho > 0.0, ErrorKind::InvalidArgument,
          "supermartingale_trend: invalid arguments");
  cfg.validate();
  const std::vector<double> b = cfg.effective_coefficients();
  const Index m = static_cast<Index>(b.size());
  double tail_n = 0.0;
  double tail_n1 = 0.0;
  if (xi != 0.0) {
    tail_n = m == 1 ? squared_tail(cfg.damping, n).value : chi_tail(cfg.damping, b, n);
    tail_n1 = m == 1 ? squared_tail(cfg.damping, n + 1).value : chi_tail(cfg.damping, b, n + 1);
  }

  std::vector<char> kept(static_cast<std::size_t>(n_paths), 0);
  std::vector<double> inc(static_cast<std::size_t>(n_paths), 0.0);
  parallel_for(n_paths, [&](Index path) {
    MixingConfig pc = cfg;
    pc.seed = derive_seed(seed, static_cast<std::uint64_t>(path));
    Mixer mixer(problem, pc, warm_start);
    std::vector<Vector> e;
    std::vector<Vector> g;
    try {
      for (Index s = 0; s < n + m - 1; ++s) {
        const StepRecord rec = mixer.step();
        e.push_back(rec.q - q_star);
        g.push_back(rec.k - rec.q);
        if (e.back().norm() > rho) return;
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NonFiniteIterate) throw;
      return;
    }
    e.push_back(mixer.current() - q_star);  // e_{n+m}
    if (e.back().norm() > rho) return;

    auto window = [&](Index start) {
      LyapunovWindow w;
      for (Index k = start; k < start + m; ++k) w.errors.push_back(e[static_cast<std::size_t>(k - 1)]);
      for (Index k = start; k < start + m - 1; ++k) w.g.push_back(g[static_cast<std::size_t>(k - 1)]);
      return w;
    };
    double v0 = 0.0;
    double v1 = 0.0;
    if (m == 1) {
      v0 = lyapunov_simple(e[static_cast<std::size_t>(n - 1)], tail_n, xi);
      v1 = lyapunov_simple(e[static_cast<std::size_t>(n)], tail_n1, xi);
    } else {
      v0 = lyapunov_extended(window(n), n, cfg.damping, b, xi, tail_n);
      v1 = lyapunov_extended(window(n + 1), n + 1, cfg.damping, b, xi, tail_n1);
    }
    kept[static_cast<std::size_t>(path)] = 1;
    inc[static_cast<std::size_t>(path)] = v1 - v0;
  });

  SupermartingaleReport rep;
  rep.n = n;
  double sum = 0.0;
  for (Index p = 0; p < n_paths; ++p) {
    if (kept[static_cast<std::size_t>(p)] == 0) continue;
    ++rep.paths;
    sum += inc[static_cast<std::size_t>(p)];
  }
  if (rep.paths == 0) return rep;
  rep.mean_increment = sum / static_cast<double>(rep.paths);
  double ss = 0.0;
  for (Index p = 0; p < n_paths; ++p) {
    if (kept[static_cast<std::size_t>(p)] == 0) continue;
    const double d = inc[static_cast<std::size_t>(p)] - rep.mean_increment;
    ss += d * d;
  }
  if (rep.paths > 1) {
    rep.std_error = std::sqrt(ss / static_cast<double>(rep.paths - 1) /
                              static_cast<double>(rep.paths));
  }
  return rep;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidArgument,
          "fit_line needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::InvalidArgument, "fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = syy - f.slope * sxy;
  f.r_squared = syy > 0.0 ? 1.0 - std::max(ss_res, 0.0) / syy : 1.0;
  return f;
}

ComplexityReport complexity_scan(const FixedPointProblem& problem, const MixingConfig& cfg,
                                 const Vector& q_star, const std::vector<Vector>& warm_start,
                                 std::vector<double> epsilons,
                                 const std::vector<std::uint64_t>& seeds, Candidate candidate) {
  require(!epsilons.empty() && !seeds.empty(), ErrorKind::InvalidArgument,
          "complexity_scan needs epsilons and seeds");
  for (double e : epsilons) {
    require(std::isfinite(e) && e > 0.0, ErrorKind::InvalidArgument, "epsilons must be > 0");
  }
  cfg.validate();
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  const std::vector<double> b = cfg.effective_coefficients();

  ComplexityReport rep;
  rep.candidate = candidate;
  rep.epsilons = epsilons;
  rep.seeds = seeds;
  rep.iterations.assign(seeds.size(), std::vector<Index>(epsilons.size(), -1));

  parallel_for(static_cast<Index>(seeds.size()), [&](Index s) {
    MixingConfig pc = cfg;
    pc.seed = seeds[static_cast<std::size_t>(s)];
    Mixer mixer(problem, pc, warm_start);
    auto& hits = rep.iterations[static_cast<std::size_t>(s)];
    Vector sum = Vector::Zero(q_star.size());
    double weight = 0.0;
    std::size_t k = 0;
    try {
      for (Index step = 0; step < cfg.max_iter && k < epsilons.size(); ++step) {
        const StepRecord rec = mixer.step();
        double dist = 0.0;
        if (candidate == Candidate::LastIterate) {
          dist = (rec.q - q_star).norm();
        } else {
          const double w = mixing::averaging_weight(cfg.damping, b, rec.n);
          sum += w * rec.q;
          weight += w;
          dist = (sum / weight - q_star).norm();
        }
        while (k < epsilons.size() && dist <= epsilons[k]) hits[k++] = rec.n - 1;
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NonFiniteIterate) throw;
    }
  });

  std::vector<double> x;
  std::vector<double> y;
  for (const auto& row : rep.iterations) {
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
      if (row[k] < 0) {
        ++rep.censored;
        continue;
      }
      if (candidate == Candidate::Averaged && row[k] == 0) continue;
      x.push_back(std::log(1.0 / epsilons[k]));
      y.push_back(candidate == Candidate::Averaged ? std::log(static_cast<double>(row[k]))
                                                   : static_cast<double>(row[k]));
    }
  }
  rep.points = static_cast<Index>(x.size());
  if (candidate == Candidate::Averaged && cfg.damping.form == DampingForm::PowerCap &&
      cfg.damping.exponent < 1.0) {
    rep.predicted_slope = 2.0 / (1.0 - cfg.damping.exponent);
  }
  bool distinct = false;
  for (double xi : x) distinct = distinct || xi != x.front();
  if (x.size() >= 2 && distinct) {
    const LinearFit f = fit_line(x, y);
    rep.slope = f.slope;
    rep.intercept = f.intercept;
    rep.r_squared = f.r_squared;
  }
  return rep;
}

}  // namespace sscf::diagnostics
