#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sscf/diagnostics.hpp"
#include "sscf/dftb.hpp"
#include "sscf/error.hpp"
#include "sscf/mixing.hpp"
#include "sscf/problems.hpp"
#include "sscf/synthetic.hpp"
#include "sscf/system_io.hpp"
#include "sscf/trace_io.hpp"

namespace sscf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using mixing::DampingSchedule;
using mixing::MixingConfig;
using mixing::Scheme;

namespace {

constexpr const char* kVersion = "0.1.0";

// Raised for anything the exit-code contract files under "usage".
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidCoefficients:
    case ErrorKind::HistoryLengthMismatch:
    case ErrorKind::WindowMismatch:
    case ErrorKind::DivergentTail:
      return kExitUsage;
    case ErrorKind::InvalidSystem:
    case ErrorKind::OverlapNotSPD:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::ParseError:
    case ErrorKind::AsymmetricInput:
    case ErrorKind::LengthMismatch:
      return kExitInvalidSystem;
    case ErrorKind::NoConvergence:
      return kExitNoConvergence;
    case ErrorKind::NonFiniteIterate:
      return kExitDivergence;
    default:
      return kExitFailure;
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts a bare array or an object with "q_star".
Vector read_charge_file(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
    if (j.is_object()) j = j.at("q_star");
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

// Everything a run records about itself.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  json config = json::object();
  std::uint64_t seed = 0;
  json inputs = json::object();
  std::vector<std::string> outputs;
  std::string started_at = utc_now();

  void write(const fs::path& dir, int status) const {
    json j;
    j["tool"] = "sscf";
    j["version"] = kVersion;
    j["trace_schema_version"] = mixing::kTraceSchemaVersion;
    j["command"] = command;
    j["args"] = args;
    j["config"] = config;
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["started_at"] = started_at;
    j["finished_at"] = utc_now();
    j["exit_status"] = status;
    write_text(dir / "manifest.json", j.dump(2));
  }
};

fs::path prepare_output(const std::string& requested) {
  const fs::path dir = fresh_directory(requested);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

dftb::TightBindingSystem load_system(const std::string& dir) {
  try {
    return dftb::read_system(dir);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) fail(ErrorKind::InvalidSystem, e.what());
    throw;
  }
}

// Schedule overrides shared by the iterative commands.
struct ScheduleFlags {
  std::optional<std::string> form;
  std::optional<double> a, offset, scale, exponent, cap;

  void attach(CLI::App* app) {
    app->add_option("--damping-form", form, "power_cap or constant")
        ->check(CLI::IsMember({"power_cap", "constant"}));
    app->add_option("--damping-a", a, "numerator a of the damping schedule");
    app->add_option("--damping-offset", offset, "offset of the damping schedule");
    app->add_option("--damping-scale", scale, "scale of n^exponent");
    app->add_option("--damping-exponent", exponent, "exponent in (1/2, 1]");
    app->add_option("--damping-cap", cap, "upper cap of a_n");
  }
  bool any() const { return form || a || offset || scale || exponent || cap; }
  void apply(DampingSchedule& s) const {
    if (form) s.form = *form == "constant" ? mixing::DampingForm::Constant
                                           : mixing::DampingForm::PowerCap;
    if (a) s.a = *a;
    if (offset) s.offset = *offset;
    if (scale) s.scale = *scale;
    if (exponent) s.exponent = *exponent;
    if (cap) s.cap = *cap;
  }
};

struct MixFlags {
  std::optional<std::string> scheme;
  std::optional<Index> m;
  std::optional<std::string> b;
  std::optional<Index> ell, nvec, max_iter, warmup, block;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, anderson_reg;
  std::optional<std::string> config;
  ScheduleFlags sched;

  void attach(CLI::App* app, bool with_ell) {
    app->add_option("--scheme", scheme, "simple, linear or anderson")
        ->check(CLI::IsMember({"simple", "linear", "anderson"}));
    app->add_option("--m", m, "mixing depth");
    app->add_option("--b", b, "'uniform' or comma-separated b_1..b_m");
    if (with_ell) {
      app->add_option("--ell", ell, "Krylov subspace dimension");
      app->add_option("--nvec", nvec, "probe vectors per iteration");
    }
    app->add_option("--seed", seed, "master seed");
    app->add_option("--max-iter", max_iter, "iterations");
    app->add_option("--warmup", warmup, "simple-mixing warm-up steps");
    app->add_option("--block", block, "block size for averaging");
    app->add_option("--tol", tol, "block-averaged residual tolerance (0 disables)");
    app->add_option("--anderson-reg", anderson_reg, "Anderson regularization (<0: default)");
    app->add_option("--config", config, "run configuration JSON; flags win");
    sched.attach(app);
  }

  MixingConfig build(MixingConfig cfg) const {
    bool damping_from_file = false;
    if (config) {
      const std::string text = read_text(*config);
      cfg = mixing::config_from_json(text, cfg);
      try {
        damping_from_file = json::parse(text).contains("damping");
      } catch (const json::exception&) {
      }
    }
    if (scheme) cfg.scheme = mixing::scheme_from_string(*scheme);
    if (m) cfg.depth = *m;
    if (cfg.scheme == Scheme::Simple && !m) cfg.depth = 1;
    if (b) {
      cfg.coefficients.clear();
      if (*b != "uniform") {
        std::stringstream ss(*b);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          try {
            cfg.coefficients.push_back(std::stod(tok));
          } catch (const std::exception&) {
            throw UsageError("--b: cannot parse '" + tok + "'");
          }
        }
        if (!m) cfg.depth = static_cast<Index>(cfg.coefficients.size());
      }
    }
    if (ell) cfg.ell = *ell;
    if (nvec) cfg.n_vec = *nvec;
    if (seed) cfg.seed = *seed;
    if (max_iter) cfg.max_iter = *max_iter;
    if (warmup) cfg.warmup_steps = *warmup;
    if (block) cfg.block_size = *block;
    if (tol) cfg.tol = *tol;
    if (anderson_reg) cfg.anderson_regularization = *anderson_reg;
    if (cfg.scheme == Scheme::Anderson && !damping_from_file && !sched.any()) {
      cfg.damping = DampingSchedule::anderson_default();
    }
    sched.apply(cfg.damping);
    cfg.validate();
    return cfg;
  }
};

// Deterministic adapter: every sample is K(q).
class ExactMap final : public mixing::FixedPointProblem {
 public:
  explicit ExactMap(const dftb::ChargeModel& model) : model_(model) {}
  Index dimension() const override { return model_.atoms(); }
  bool has_exact() const override { return true; }
  Vector exact(const Vector& q) const override { return model_.charge_exact(q); }
  Vector sample(const Vector& q, const estimator::RngStream&, Index) const override {
    return model_.charge_exact(q);
  }

 private:
  const dftb::ChargeModel& model_;
};

struct ExactSolve {
  mixing::IterationTrace trace;
  Vector q_star;
  bool converged = false;
  double residual_inf = 0.0;
};

// q_{n+1} = (1 − a) q_n + a K(q_n) until ‖K(q_n) − q_n‖∞ ≤ tol.
ExactSolve solve_exact(const dftb::ChargeModel& model, const Vector& init, double damping,
                       double tol, Index max_iter) {
  ExactMap map(model);
  MixingConfig cfg;
  cfg.scheme = Scheme::Simple;
  cfg.damping = DampingSchedule::constant(damping);
  cfg.max_iter = max_iter;
  cfg.validate();
  ExactSolve out;
  out.trace.config = cfg;
  mixing::Mixer mixer(map, cfg, {init});
  out.q_star = init;
  out.residual_inf = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < max_iter; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    mixing::StepRecord rec = mixer.step();
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.q_star = rec.q;
    out.residual_inf = rec.residual_inf;
    out.trace.steps.push_back(std::move(rec));
    if (out.residual_inf <= tol) {
      out.converged = true;
      break;
    }
  }
  out.trace.final_iterate = out.converged ? out.q_star : mixer.current();
  return out;
}

std::vector<std::uint64_t> default_seeds() { return {1, 2, 3, 4, 5}; }

std::vector<double> default_epsilons() {
  std::vector<double> e;
  for (int k = 0; k <= 6; ++k) e.push_back(std::pow(10.0, -1.0 - 0.25 * k));
  return e;
}

// ---------------------------------------------------------------- commands

struct GenFlags {
  std::string out;
  std::optional<std::string> spec_file;
  std::optional<std::string> lattice;
  std::optional<Index> atoms, orbitals;
  std::optional<double> hopping, onsite, disorder, overlap, softening, hubbard_u, q0, mu, beta,
      spacing, splitting, gamma_sign;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> name;
};

int cmd_gen(const GenFlags& f, Manifest& man, std::ostream& out) {
  dftb::SyntheticSpec spec;
  if (f.spec_file) spec = dftb::spec_from_json(read_text(*f.spec_file));
  if (f.lattice) spec.lattice = dftb::lattice_from_string(*f.lattice);
  if (f.atoms) spec.atoms = *f.atoms;
  if (f.orbitals) spec.orbitals_per_atom = *f.orbitals;
  if (f.hopping) spec.hopping = *f.hopping;
  if (f.onsite) spec.onsite = *f.onsite;
  if (f.disorder) spec.onsite_disorder = *f.disorder;
  if (f.overlap) spec.overlap = *f.overlap;
  if (f.softening) spec.coulomb_softening = *f.softening;
  if (f.hubbard_u) spec.hubbard_u = *f.hubbard_u;
  if (f.q0) spec.q0 = *f.q0;
  if (f.mu) spec.mu = *f.mu;
  if (f.beta) spec.beta = *f.beta;
  if (f.spacing) spec.spacing = *f.spacing;
  if (f.splitting) spec.orbital_splitting = *f.splitting;
  if (f.gamma_sign) spec.gamma_sign = *f.gamma_sign;
  if (f.seed) spec.seed = *f.seed;
  if (f.name) spec.name = *f.name;
  spec.validate();
  man.seed = spec.seed;
  man.config = json::parse(dftb::spec_to_json(spec));

  const dftb::TightBindingSystem sys = dftb::generate_synthetic(spec);
  const fs::path dir = prepare_output(f.out);
  dftb::write_system(sys, dir);
  out << dir.string() << '\n';
  return kExitOk;
}

struct ScfExactFlags {
  std::string system, out;
  double damping = 0.001;
  double tol = 1e-10;
  Index max_iter = 200000;
  std::optional<std::string> init;
};

int cmd_scf_exact(const ScfExactFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  man.inputs["system"] = f.system;
  man.config = {{"damping", f.damping}, {"tol", f.tol}, {"max_iter", f.max_iter}};
  if (f.init) man.inputs["init"] = *f.init;
  if (!(f.damping > 0.0 && f.damping <= 1.0)) throw UsageError("--damping must lie in (0, 1]");
  if (!(f.tol >= 0.0)) throw UsageError("--tol must be >= 0");
  if (f.max_iter < 0) throw UsageError("--max-iter must be >= 0");

  const dftb::ChargeModel model(load_system(f.system));
  const Vector init = f.init ? read_charge_file(*f.init) : model.system().q0;
  if (init.size() != model.atoms()) throw UsageError("--init has the wrong length");

  dir = prepare_output(f.out);
  const ExactSolve res = solve_exact(model, init, f.damping, f.tol, f.max_iter);
  mixing::write_trace_csv(res.trace, dir / "trace.csv");
  man.outputs.push_back("trace.csv");

  json q;
  q["q_star"] = vec_json(res.q_star);
  q["converged"] = res.converged;
  q["iterations"] = res.trace.steps.size();
  q["residual_inf"] = res.trace.steps.empty() ? json(nullptr) : json(res.residual_inf);
  q["electron_count"] = res.q_star.sum();
  const EigenDecomposition eig = eig_sym(model.build_a(res.q_star));
  double tr = 0.0;
  const auto fd = model.occupation();
  for (Index i = 0; i < eig.eigenvalues.size(); ++i) tr += fd(eig.eigenvalues(i));
  q["trace_f"] = tr;
  write_text(dir / "qstar.json", q.dump(2));
  man.outputs.push_back("qstar.json");

  out << (res.converged ? "converged" : "not converged") << " after " << res.trace.steps.size()
      << " iterations, residual " << res.residual_inf << '\n';
  return res.converged ? kExitOk : kExitNoConvergence;
}

struct ScfFlags {
  std::string system, out;
  std::optional<std::string> qstar, init;
  MixFlags mix;
};

MixingConfig scf_defaults() {
  MixingConfig cfg;
  cfg.ell = 20;
  cfg.max_iter = 30000;
  cfg.warmup_steps = 2000;
  cfg.block_size = 1000;
  return cfg;
}

int cmd_scf(const ScfFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  man.inputs["system"] = f.system;
  if (f.qstar) man.inputs["qstar"] = *f.qstar;
  if (f.init) man.inputs["init"] = *f.init;
  const MixingConfig cfg = f.mix.build(scf_defaults());
  man.config = json::parse(mixing::config_to_json(cfg));
  man.seed = cfg.seed;

  const dftb::ChargeModel model(load_system(f.system));
  std::optional<Vector> q_star;
  if (f.qstar) {
    q_star = read_charge_file(*f.qstar);
    if (q_star->size() != model.atoms()) throw UsageError("--qstar has the wrong length");
  }
  const Vector init = f.init ? read_charge_file(*f.init) : model.system().q0;
  if (init.size() != model.atoms()) throw UsageError("--init has the wrong length");

  dir = prepare_output(f.out);
  const problems::DftbProblem problem(model, cfg.ell);
  mixing::IterationTrace trace;
  int status = kExitOk;
  try {
    mixing::run(problem, cfg, {init}, trace);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFiniteIterate) throw;
    out << e.what() << '\n';
    status = kExitDivergence;
  }
  mixing::write_trace_csv(trace, dir / "trace.csv", q_star, cfg.block_size);
  man.outputs.push_back("trace.csv");

  json side = json::parse(mixing::trace_sidecar_json(trace));
  if (q_star && !trace.steps.empty()) {
    json blocks = json::array();
    for (const Vector& bm : mixing::block_means(trace, cfg.block_size)) {
      blocks.push_back((bm - *q_star).lpNorm<Eigen::Infinity>());
    }
    side["block_err_inf"] = blocks;
  }
  write_text(dir / "averaged.json", side.dump(2));
  man.outputs.push_back("averaged.json");
  out << trace.steps.size() << " iterations written to " << dir.string() << '\n';
  return status;
}

struct SweepFlags {
  std::string system, out;
  std::vector<Index> ells;
  std::optional<std::string> qstar;
  Index iters = 20000;
  std::optional<Index> tail;
  Index replicates = 5;
  MixFlags mix;
};

int cmd_sweep_ell(const SweepFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  if (f.ells.empty()) throw UsageError("--ells must list at least one subspace dimension");
  for (Index l : f.ells) {
    if (l < 1) throw UsageError("--ells entries must be >= 1");
  }
  if (f.iters < 2) throw UsageError("--iters must be >= 2");
  const Index tail = f.tail.value_or(f.iters / 2);
  if (tail < 1 || tail > f.iters) throw UsageError("--tail must lie in [1, iters]");
  if (f.replicates < 2) throw UsageError("--replicates must be >= 2");
  MixingConfig base;
  base.max_iter = f.iters;
  const MixingConfig cfg0 = f.mix.build(base);
  man.inputs["system"] = f.system;
  man.seed = cfg0.seed;
  man.config = {{"mixing", json::parse(mixing::config_to_json(cfg0))},
                {"ells", f.ells},
                {"iters", f.iters},
                {"tail", tail},
                {"replicates", f.replicates}};

  const dftb::ChargeModel model(load_system(f.system));
  Vector q_star;
  if (f.qstar) {
    man.inputs["qstar"] = *f.qstar;
    q_star = read_charge_file(*f.qstar);
    if (q_star.size() != model.atoms()) throw UsageError("--qstar has the wrong length");
  } else {
    const ExactSolve res = solve_exact(model, model.system().q0, 0.001, 1e-10, 200000);
    if (!res.converged) fail(ErrorKind::NoConvergence, "reference fixed point did not converge");
    q_star = res.q_star;
  }

  dir = prepare_output(f.out);
  std::ostringstream csv;
  csv << "ell,err_inf_estimate,noise_estimate\n";
  for (Index l : f.ells) {
    MixingConfig cfg = cfg0;
    cfg.ell = l;
    cfg.max_iter = f.iters;
    cfg.tol = 0.0;
    const problems::DftbProblem problem(model, l);
    // tail mean of each replicate; the spread across replicates is the noise
    std::vector<Vector> means;
    Vector total = Vector::Zero(q_star.size());
    for (Index r = 0; r < f.replicates; ++r) {
      MixingConfig rc = cfg;
      rc.seed = diagnostics::derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
      const mixing::IterationTrace trace = mixing::run(problem, rc, {q_star});
      Vector s = Vector::Zero(q_star.size());
      for (Index i = f.iters - tail; i < f.iters; ++i) s += trace.steps[static_cast<std::size_t>(i)].q;
      means.push_back(s / static_cast<double>(tail));
      total += means.back();
    }
    const double reps = static_cast<double>(f.replicates);
    const Vector mean = total / reps;
    Vector var = Vector::Zero(q_star.size());
    for (const Vector& m : means) var += (m - mean).cwiseAbs2();
    var /= reps - 1.0;
    const double noise = (var / reps).cwiseSqrt().maxCoeff();
    char line[128];
    std::snprintf(line, sizeof line, "%ld,%.17g,%.17g\n", static_cast<long>(l),
                  (mean - q_star).lpNorm<Eigen::Infinity>(), noise);
    csv << line;
  }
  write_text(dir / "sweep.csv", csv.str());
  man.outputs.push_back("sweep.csv");
  out << csv.str();
  return kExitOk;
}

struct StabilityFlags {
  std::string preset, out;
  double sigma = 1.0;
  Index paths = 1000;
  Index length = 2000;
  double rho = 1.0;
  double q1 = 0.5;
  std::optional<double> xi;
  MixFlags mix;
};

int cmd_stability(const StabilityFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  if (f.paths < 1) throw UsageError("--paths must be >= 1");
  if (f.length < 1) throw UsageError("--length must be >= 1");
  if (!(f.rho > 0.0)) throw UsageError("--rho must be > 0");
  if (!(f.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
  MixingConfig base;
  base.max_iter = f.length;
  const MixingConfig cfg = f.mix.build(base);
  man.seed = cfg.seed;

  const auto problem = problems::AffineNoisyProblem::scalar_half(f.sigma);
  const Vector q_star = problem.fixed_point();
  const double xi =
      f.xi.value_or(diagnostics::estimate_xi(problem, q_star, f.rho, cfg.seed));
  man.config = {{"preset", f.preset},     {"sigma", f.sigma}, {"paths", f.paths},
                {"length", f.length},     {"rho", f.rho},     {"q1", f.q1},
                {"xi", xi},               {"mixing", json::parse(mixing::config_to_json(cfg))}};
  const diagnostics::StabilityReport rep = diagnostics::stability_monte_carlo(
      problem, cfg, f.rho, q_star, {Vector::Constant(1, f.q1)}, f.paths, f.length, xi, cfg.seed);

  dir = prepare_output(f.out);
  json j;
  j["preset"] = f.preset;
  j["rho"] = rep.rho;
  j["paths"] = rep.paths;
  j["path_length"] = rep.path_length;
  j["exits"] = rep.exits;
  j["exit_fraction"] = rep.exit_fraction;
  j["std_error"] = rep.std_error;
  j["bound"] = rep.bound;
  j["xi"] = rep.xi;
  j["bound_holds"] = rep.exit_fraction <= rep.bound + 3.0 * rep.std_error;
  j["final_errors"] = rep.final_errors;
  write_text(dir / "report.json", j.dump(2));
  man.outputs.push_back("report.json");
  out << "exit fraction " << rep.exit_fraction << " (bound " << rep.bound << ")\n";
  return kExitOk;
}

struct ComplexityFlags {
  std::string preset, out;
  std::string mode = "stochastic";
  std::optional<double> sigma;
  std::vector<double> eps;
  std::vector<std::uint64_t> seeds;
  Index budget = 2000000;
  double q1 = 0.5;
  MixFlags mix;
};

int cmd_complexity(const ComplexityFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  const bool stochastic = f.mode == "stochastic";
  const double sigma = f.sigma.value_or(stochastic ? 0.5 : 0.0);
  if (!(sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
  if (f.budget < 1) throw UsageError("--budget must be >= 1");
  MixingConfig base;
  base.max_iter = f.budget;
  base.damping = stochastic ? DampingSchedule::power_cap(0.2, 0.0, 1.0, 0.75, 0.2)
                            : DampingSchedule::constant(0.1);
  MixingConfig cfg = f.mix.build(base);
  cfg.max_iter = f.budget;
  const std::vector<double> eps = f.eps.empty() ? default_epsilons() : f.eps;
  const std::vector<std::uint64_t> seeds = f.seeds.empty() ? default_seeds() : f.seeds;
  man.seed = seeds.front();
  man.config = {{"preset", f.preset}, {"mode", f.mode}, {"sigma", sigma},
                {"eps", eps},         {"seeds", seeds}, {"budget", f.budget},
                {"q1", f.q1},         {"mixing", json::parse(mixing::config_to_json(cfg))}};

  const auto problem = problems::AffineNoisyProblem::scalar_half(sigma);
  const diagnostics::ComplexityReport rep = diagnostics::complexity_scan(
      problem, cfg, problem.fixed_point(), {Vector::Constant(1, f.q1)}, eps, seeds,
      stochastic ? diagnostics::Candidate::Averaged : diagnostics::Candidate::LastIterate);

  dir = prepare_output(f.out);
  json j;
  j["preset"] = f.preset;
  j["mode"] = f.mode;
  j["candidate"] = stochastic ? "averaged" : "last_iterate";
  j["epsilons"] = rep.epsilons;
  j["seeds"] = rep.seeds;
  j["iterations"] = rep.iterations;
  j["censored"] = rep.censored;
  j["points"] = rep.points;
  j["slope"] = rep.slope;
  j["intercept"] = rep.intercept;
  j["r_squared"] = rep.r_squared;
  j["predicted_slope"] = rep.predicted_slope;
  write_text(dir / "report.json", j.dump(2));
  man.outputs.push_back("report.json");
  out << "slope " << rep.slope << " (R^2 " << rep.r_squared << ", " << rep.censored
      << " censored)\n";
  return kExitOk;
}

struct JacobianFlags {
  std::string system, out;
  std::optional<std::string> qstar;
  double h = 1e-3;
};

int cmd_jacobian(const JacobianFlags& f, Manifest& man, fs::path& dir, std::ostream& out) {
  if (!(f.h > 0.0)) throw UsageError("--step must be > 0");
  man.inputs["system"] = f.system;
  man.config = {{"h", f.h}};
  const dftb::ChargeModel model(load_system(f.system));
  Vector q_star;
  if (f.qstar) {
    man.inputs["qstar"] = *f.qstar;
    q_star = read_charge_file(*f.qstar);
    if (q_star.size() != model.atoms()) throw UsageError("--qstar has the wrong length");
  } else {
    const ExactSolve res = solve_exact(model, model.system().q0, 0.001, 1e-10, 200000);
    if (!res.converged) fail(ErrorKind::NoConvergence, "reference fixed point did not converge");
    q_star = res.q_star;
  }
  const Matrix jac = diagnostics::jacobian_fd(
      [&](const Vector& q) { return model.charge_exact(q); }, q_star, f.h);
  auto eigs = diagnostics::eigenvalues(jac);
  std::sort(eigs.begin(), eigs.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  const diagnostics::ThetaMax tm = diagnostics::theta_max(eigs);

  dir = prepare_output(f.out);
  json j;
  json ev = json::array();
  for (const auto& e : eigs) ev.push_back({e.real(), e.imag()});
  j["eigenvalues"] = ev;
  j["theta_max"] = tm.value;
  j["stability_violation"] = tm.violated;
  if (!tm.violated) {
    j["radius_at_0.99_theta_max"] = diagnostics::damped_spectral_radius(eigs, 0.99 * tm.value);
    j["radius_at_1.01_theta_max"] = diagnostics::damped_spectral_radius(eigs, 1.01 * tm.value);
  }
  write_text(dir / "report.json", j.dump(2));
  man.outputs.push_back("report.json");
  out << "theta_max " << tm.value << '\n';
  return kExitOk;
}

}  // namespace

fs::path fresh_directory(const fs::path& requested) {
  std::error_code ec;
  if (!fs::exists(requested, ec)) return requested;
  if (fs::is_directory(requested, ec) && fs::is_empty(requested, ec)) return requested;
  std::string base = requested.string();
  while (base.size() > 1 && base.back() == '/') base.pop_back();
  for (int k = 2;; ++k) {
    fs::path candidate = base + "-" + std::to_string(k);
    if (!fs::exists(candidate, ec)) return candidate;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic self-consistent-charge tight-binding toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenFlags gen_f;
  auto* gen = app.add_subcommand("gen", "generate a synthetic tight-binding system");
  gen->add_option("-o,--out", gen_f.out, "output system directory")->required();
  gen->add_option("--spec", gen_f.spec_file, "generator spec JSON; flags win");
  gen->add_option("--lattice", gen_f.lattice, "honeycomb or chain");
  gen->add_option("--atoms", gen_f.atoms, "number of atoms");
  gen->add_option("--orbitals", gen_f.orbitals, "orbitals per atom");
  gen->add_option("--hopping", gen_f.hopping, "hopping t (bonds carry -t)");
  gen->add_option("--onsite", gen_f.onsite, "onsite energy");
  gen->add_option("--disorder", gen_f.disorder, "onsite disorder amplitude");
  gen->add_option("--overlap", gen_f.overlap, "nearest-neighbour overlap s");
  gen->add_option("--softening", gen_f.softening, "Coulomb softening length");
  gen->add_option("--hubbard-u", gen_f.hubbard_u, "onsite Hubbard U");
  gen->add_option("--q0", gen_f.q0, "reference electrons per atom");
  gen->add_option("--mu", gen_f.mu, "Fermi level");
  gen->add_option("--beta", gen_f.beta, "inverse temperature");
  gen->add_option("--spacing", gen_f.spacing, "lattice spacing");
  gen->add_option("--splitting", gen_f.splitting, "orbital level splitting");
  gen->add_option("--gamma-sign", gen_f.gamma_sign, "sign applied to gamma (+1 or -1)");
  gen->add_option("--seed", gen_f.seed, "disorder seed");
  gen->add_option("--name", gen_f.name, "system name");

  ScfExactFlags ex_f;
  auto* ex = app.add_subcommand("scf-exact", "damped fixed-point iteration on the exact map");
  ex->add_option("--system", ex_f.system, "system directory")->required();
  ex->add_option("-o,--out", ex_f.out, "output directory")->required();
  ex->add_option("--damping", ex_f.damping, "constant damping a");
  ex->add_option("--tol", ex_f.tol, "residual tolerance (inf-norm)");
  ex->add_option("--max-iter", ex_f.max_iter, "iteration limit");
  ex->add_option("--init", ex_f.init, "initial charges JSON");

  ScfFlags scf_f;
  auto* scf = app.add_subcommand("scf", "stochastic SCF with simple, linear or Anderson mixing");
  scf->add_option("--system", scf_f.system, "system directory")->required();
  scf->add_option("-o,--out", scf_f.out, "output directory")->required();
  scf->add_option("--qstar", scf_f.qstar, "reference fixed point (qstar.json)");
  scf->add_option("--init", scf_f.init, "initial charges JSON");
  scf_f.mix.attach(scf, true);

  SweepFlags sw_f;
  auto* sw = app.add_subcommand("sweep-ell", "fixed-point error of the subspace map versus ell");
  sw->add_option("--system", sw_f.system, "system directory")->required();
  sw->add_option("-o,--out", sw_f.out, "output directory")->required();
  sw->add_option("--ells", sw_f.ells, "comma-separated subspace dimensions")->delimiter(',');
  sw->add_option("--qstar", sw_f.qstar, "reference fixed point (qstar.json)");
  sw->add_option("--iters", sw_f.iters, "iterations per ell");
  sw->add_option("--tail", sw_f.tail, "trailing iterates averaged (default iters/2)");
  sw->add_option("--replicates", sw_f.replicates, "independent runs per ell (seeds derived from --seed)");
  sw_f.mix.attach(sw, false);

  StabilityFlags st_f;
  auto* st = app.add_subcommand("stability", "Monte-Carlo exit-probability experiment");
  st->add_option("--preset", st_f.preset, "problem preset")
      ->required()
      ->check(CLI::IsMember({"scalar-half"}));
  st->add_option("-o,--out", st_f.out, "output directory")->required();
  st->add_option("--sigma", st_f.sigma, "noise amplitude");
  st->add_option("--paths", st_f.paths, "number of paths");
  st->add_option("--length", st_f.length, "steps per path");
  st->add_option("--rho", st_f.rho, "ball radius");
  st->add_option("--q1", st_f.q1, "initial iterate");
  st->add_option("--xi", st_f.xi, "noise bound (default: estimated)");
  st_f.mix.attach(st, false);

  ComplexityFlags cx_f;
  auto* cx = app.add_subcommand("complexity", "iterations-to-epsilon scaling");
  cx->add_option("--preset", cx_f.preset, "problem preset")
      ->required()
      ->check(CLI::IsMember({"scalar-half"}));
  cx->add_option("-o,--out", cx_f.out, "output directory")->required();
  cx->add_option("--mode", cx_f.mode, "stochastic or deterministic")
      ->check(CLI::IsMember({"stochastic", "deterministic"}));
  cx->add_option("--sigma", cx_f.sigma, "noise amplitude");
  cx->add_option("--eps", cx_f.eps, "comma-separated tolerances")->delimiter(',');
  cx->add_option("--seeds", cx_f.seeds, "comma-separated seeds")->delimiter(',');
  cx->add_option("--budget", cx_f.budget, "iteration budget per seed");
  cx->add_option("--q1", cx_f.q1, "initial iterate");
  cx_f.mix.attach(cx, false);

  JacobianFlags jc_f;
  auto* jc = app.add_subcommand("jacobian", "finite-difference Jacobian at the fixed point");
  jc->add_option("--system", jc_f.system, "system directory")->required();
  jc->add_option("-o,--out", jc_f.out, "output directory")->required();
  jc->add_option("--qstar", jc_f.qstar, "reference fixed point (qstar.json)");
  jc->add_option("--step", jc_f.h, "centred-difference step h");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Manifest man;
  man.args = args;
  fs::path dir;
  int status = kExitFailure;
  try {
    if (gen->parsed()) {
      man.command = "gen";
      return cmd_gen(gen_f, man, out);
    }
    if (ex->parsed()) {
      man.command = "scf-exact";
      status = cmd_scf_exact(ex_f, man, dir, out);
    } else if (scf->parsed()) {
      man.command = "scf";
      status = cmd_scf(scf_f, man, dir, out);
    } else if (sw->parsed()) {
      man.command = "sweep-ell";
      status = cmd_sweep_ell(sw_f, man, dir, out);
    } else if (st->parsed()) {
      man.command = "stability";
      status = cmd_stability(st_f, man, dir, out);
    } else if (cx->parsed()) {
      man.command = "complexity";
      status = cmd_complexity(cx_f, man, dir, out);
    } else if (jc->parsed()) {
      man.command = "jacobian";
      status = cmd_jacobian(jc_f, man, dir, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    status = kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    status = exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    status = kExitFailure;
  }
  if (!dir.empty()) {
    try {
      man.write(dir, status);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      if (status == kExitOk) status = kExitFailure;
    }
  }
  return status;
}

}  // namespace sscf::cli
