#include <cmath>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "sscf/diagnostics.hpp"
#include "sscf/error.hpp"
#include "sscf/problems.hpp"
#include "test_support.hpp"

using namespace sscf;
using namespace sscf::diagnostics;
using mixing::DampingSchedule;
using mixing::MixingConfig;
using problems::AffineNoisyProblem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an sscf::Error");
  return ErrorKind::Io;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("squared tails") {
  const auto harmonic = DampingSchedule::power_cap(0.5, 0.0, 1.0, 1.0, 1.0);
  const auto t = squared_tail(harmonic, 1);
  CHECK(std::abs(t.value - 0.25 * M_PI * M_PI / 6.0) < 1e-9);
  CHECK(t.remainder >= 0.0);
  // ζ(2) − 1 − 1/4
  CHECK(std::abs(squared_tail(harmonic, 3).value - 0.25 * (M_PI * M_PI / 6.0 - 1.25)) < 1e-9);
  CHECK(kind_of([] { (void)squared_tail(DampingSchedule::constant(0.1), 1); }) ==
        ErrorKind::DivergentTail);
  auto half = harmonic;
  half.exponent = 0.5;
  CHECK(kind_of([&] { (void)squared_tail(half, 1); }) == ErrorKind::DivergentTail);
  // one coefficient: χ is a²
  CHECK(chi(harmonic, {1.0}, 4) == doctest::Approx(0.25 / 16.0));
  CHECK(chi_tail(harmonic, {1.0}, 2) == doctest::Approx(squared_tail(harmonic, 2).value));
}

TEST_CASE("lyapunov functionals") {
  const auto sched = DampingSchedule::power_cap(0.5, 0.0, 1.0, 1.0, 1.0);
  const Vector e = (Vector(2) << 3.0, 4.0).finished();
  CHECK(lyapunov_simple(Vector::Zero(2), 1, sched, 0.0) == 0.0);
  CHECK(lyapunov_simple(e, 5, sched, 0.0) == 25.0);
  CHECK(lyapunov_simple(e, 1, sched, 1.0) - 25.0 == doctest::Approx(0.25 * M_PI * M_PI / 6.0).epsilon(1e-9));

  LyapunovWindow one{{e}, {}};
  CHECK(lyapunov_extended(one, 3, sched, {1.0}, 2.0) ==
        doctest::Approx(lyapunov_simple(e, 3, sched, 2.0)).epsilon(1e-14));

  LyapunovWindow zero{{Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)},
                      {Vector::Zero(2), Vector::Zero(2)}};
  const std::vector<double> b3{0.2, 0.3, 0.5};
  CHECK(lyapunov_extended(zero, 2, sched, b3, 1.5) ==
        doctest::Approx(1.5 * chi_tail(sched, b3, 2)).epsilon(1e-14));

  // m = 2: ‖e_{n+1}‖² + b₁‖e_n + a_{n+1} G_n‖²
  const auto c = DampingSchedule::constant(0.1);
  LyapunovWindow two{{scalar(1.0), scalar(2.0)}, {scalar(3.0)}};
  CHECK(lyapunov_extended(two, 1, c, {0.25, 0.75}, 0.0) == doctest::Approx(4.0 + 0.25 * 1.69));
  // m = 3, n = 1, a_n = 1/(2n): ‖e₃‖² + b₂‖e₂ + a₃G₂‖² + b₁‖e₁ + a₃G₁‖² + b₁‖e₂ + a₄G₂‖²
  const auto h = DampingSchedule::power_cap(0.5, 0.0, 1.0, 1.0, 1.0);
  LyapunovWindow three{{scalar(1.0), scalar(-1.0), scalar(0.5)}, {scalar(2.0), scalar(4.0)}};
  const double a3 = 1.0 / 6.0, a4 = 0.125;
  const double expect = 0.25 + 0.3 * std::pow(-1.0 + a3 * 4.0, 2) + 0.2 * std::pow(1.0 + a3 * 2.0, 2) +
                        0.2 * std::pow(-1.0 + a4 * 4.0, 2);
  CHECK(lyapunov_extended(three, 1, h, b3, 0.0) == doctest::Approx(expect).epsilon(1e-14));

  LyapunovWindow bad{{scalar(1.0), scalar(2.0)}, {}};
  CHECK(kind_of([&] { (void)lyapunov_extended(bad, 1, c, {0.5, 0.5}, 0.0); }) ==
        ErrorKind::WindowMismatch);

  SUBCASE("non-increasing along a noise-free contraction") {
    const auto p = AffineNoisyProblem::scalar_half(0.0);
    MixingConfig cfg;
    cfg.max_iter = 200;
    const auto tr = mixing::run(p, cfg, {scalar(0.8)});
    double prev = INFINITY;
    for (const auto& r : tr.steps) {
      const double v = lyapunov_simple(r.q, r.n, cfg.damping, 0.0);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("jacobian and stability condition") {
  std::mt19937_64 rng(1);
  const Matrix m = testing::random_matrix(rng, 4, 4);
  const Matrix j = jacobian_fd([&](const Vector& q) { return Vector(m * q); },
                               testing::random_vector(rng, 4));
  CHECK((j - m).cwiseAbs().maxCoeff() < 1e-11);
  const Matrix d = jacobian_fd([](const Vector& q) { return Vector(q.cwiseProduct(q)); }, scalar(1.0));
  CHECK(std::abs(d(0, 0) - 2.0) < 1e-9);

  const auto t = theta_max({{-6.8859, 0.0}});
  CHECK(t.value == doctest::Approx(2.0 / 7.8859).epsilon(1e-14));
  CHECK_FALSE(t.violated);
  CHECK(theta_max({{0.0, 0.0}}).value == 2.0);
  const auto v = theta_max({{-1.0, 0.0}, {1.0, 0.5}});
  CHECK(v.value == 0.0);
  CHECK(v.violated);

  SUBCASE("threshold on random stable spectra") {
    std::uniform_real_distribution<double> re(-8.0, 0.9), im(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
      std::vector<std::complex<double>> eigs;
      for (int i = 0; i < 6; ++i) eigs.emplace_back(re(rng), im(rng));
      const double th = theta_max(eigs).value;
      CHECK(damped_spectral_radius(eigs, 0.99 * th) < 1.0);
      CHECK(damped_spectral_radius(eigs, 1.01 * th) >= 1.0 - 1e-9);
    }
  }
  SUBCASE("eigenvalues of a rotation") {
    Matrix r(2, 2);
    r << 0, -1, 1, 0;
    const auto ev = eigenvalues(r);
    REQUIRE(ev.size() == 2);
    for (const auto& l : ev) {
      CHECK(std::abs(l.real()) < 1e-14);
      CHECK(std::abs(std::abs(l.imag()) - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("companion equilibrium") {
  const auto two = companion_equilibrium({0.5, 0.5});
  CHECK(std::abs(two.pi(0) - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(two.pi(1) - 1.0 / 3.0) < 1e-12);
  CHECK(two.convergence_error <= 1e-10);
  const auto one = companion_equilibrium({1.0});
  CHECK(one.pi(0) == 1.0);
  CHECK(companion_matrix({1.0}) == Matrix::Ones(1, 1));

  Matrix p = companion_matrix({0.25, 0.25, 0.25, 0.25});
  for (int k = 0; k < 8; ++k) p = p * p;
  for (Index i = 1; i < 4; ++i) CHECK((p.row(i) - p.row(0)).cwiseAbs().maxCoeff() <= 1e-10);

  CHECK(kind_of([] { (void)companion_equilibrium({0.0, 1.0}); }) == ErrorKind::InvalidCoefficients);
  CHECK(kind_of([] { (void)companion_equilibrium({1.0, 0.0}); }) == ErrorKind::InvalidCoefficients);
  CHECK(kind_of([] { (void)companion_equilibrium({0.6, 0.6}); }) == ErrorKind::InvalidCoefficients);

  SUBCASE("random coefficient sets against an eigensolver") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int t = 0; t < 30; ++t) {
      const std::size_t m = 1 + static_cast<std::size_t>(t % 6);
      std::vector<double> b(m);
      double s = 0.0;
      for (auto& x : b) s += (x = u(rng));
      for (auto& x : b) x /= s;
      const auto eq = companion_equilibrium(b);
      const Matrix bm = companion_matrix(b);
      // left eigenvector for eigenvalue 1
      Eigen::EigenSolver<Matrix> es(bm.transpose());
      Index best = 0;
      for (Index i = 1; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i) - 1.0) < std::abs(es.eigenvalues()(best) - 1.0)) best = i;
      Vector ref = es.eigenvectors().col(best).real();
      ref /= ref.sum();
      CHECK((eq.pi - ref).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((eq.pi.transpose() * bm - eq.pi.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((eq.pi.array() > 0.0).all());
      CHECK(eq.convergence_error <= 1e-8);
    }
  }
}

TEST_CASE("seeds and noise level") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));
  const auto p = AffineNoisyProblem::scalar_half(0.7);
  // every sample is off by exactly ±σ
  CHECK(estimate_xi(p, p.fixed_point(), 1.0, 5) == doctest::Approx(1.5 * 0.49).epsilon(1e-12));
}

TEST_CASE("stability experiments") {
  MixingConfig cfg;
  cfg.damping = DampingSchedule::power_cap(0.5, 1.0, 1.0, 1.0, 0.5);
  SUBCASE("noise-free contraction never exits") {
    const auto p = AffineNoisyProblem::scalar_half(0.0);
    const auto r = stability_monte_carlo(p, cfg, 1.0, scalar(0.0), {scalar(0.5)}, 50, 200, 0.0, 1);
    CHECK(r.exits == 0);
    CHECK(r.bound == doctest::Approx(0.25));
  }
  SUBCASE("huge ball") {
    const auto p = AffineNoisyProblem::scalar_half(1.0);
    const auto r = stability_monte_carlo(p, cfg, 1e6, scalar(0.0), {scalar(0.5)}, 50, 200,
                                         estimate_xi(p, scalar(0.0), 1.0, 1), 1);
    CHECK(r.exits == 0);
    CHECK(r.bound < 1e-10);
  }
  SUBCASE("bound holds and results are reproducible") {
    const auto p = AffineNoisyProblem::scalar_half(1.0);
    const double xi = estimate_xi(p, scalar(0.0), 1.0, 2);
    const auto a = stability_monte_carlo(p, cfg, 1.0, scalar(0.0), {scalar(0.5)}, 300, 300, xi, 3);
    const auto b = stability_monte_carlo(p, cfg, 1.0, scalar(0.0), {scalar(0.5)}, 300, 300, xi, 3);
    CHECK(a.exits == b.exits);
    CHECK(a.final_errors == b.final_errors);
    CHECK(a.exit_fraction <= a.bound + 3.0 * a.std_error);
  }
  SUBCASE("supermartingale trend") {
    const auto p = AffineNoisyProblem::scalar_half(0.5);
    const double xi = estimate_xi(p, scalar(0.0), 1.0, 2);
    const auto r = supermartingale_trend(p, cfg, 1.0, scalar(0.0), {scalar(0.5)}, 600, 20, xi, 4);
    CHECK(r.paths >= 500);
    CHECK(r.mean_increment <= 3.0 * r.std_error);
  }
}

TEST_CASE("complexity scan") {
  const auto p = AffineNoisyProblem::scalar_half(0.0);
  MixingConfig cfg;
  cfg.damping = DampingSchedule::constant(0.1);
  cfg.max_iter = 100000;
  std::vector<double> eps;
  for (int k = 0; k < 7; ++k) eps.push_back(std::pow(10.0, -1.0 - 0.5 * k));
  const auto r = complexity_scan(p, cfg, scalar(0.0), {scalar(0.5)}, eps, {1, 2}, Candidate::LastIterate);
  CHECK(r.censored == 0);
  CHECK(r.r_squared >= 0.99);
  // 0.5·0.95ⁿ ≤ ε
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const Index expected = static_cast<Index>(std::ceil(std::log(r.epsilons[k] / 0.5) / std::log(0.95) - 1e-9));
    CHECK(r.iterations[0][k] == expected);
  }
  const auto easy = complexity_scan(p, cfg, scalar(0.0), {scalar(0.5)}, {1.0}, {1}, Candidate::Averaged);
  CHECK(easy.iterations[0][0] == 0);

  const auto f = fit_line({1, 2, 3}, {3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
}
