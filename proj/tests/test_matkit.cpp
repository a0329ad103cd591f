#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "sscf/dftb.hpp"
#include "sscf/error.hpp"
#include "sscf/matkit.hpp"
#include "sscf/matrix_market.hpp"
#include "test_support.hpp"

using namespace sscf;

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

}  // namespace

TEST_CASE("symmetric storage keeps both triangles identical") {
  SymmetricMatrix a(3);
  a.set(0, 2, 1.5);
  a.add(2, 0, 0.25);
  CHECK(a(0, 2) == 1.75);
  CHECK(a(2, 0) == 1.75);

  Matrix m(2, 2);
  m << 1, 2, 2 + 1e-15, 1;
  CHECK(kind_of([&] { (void)SymmetricMatrix::from_dense(m); }) == ErrorKind::AsymmetricInput);
  const auto lower = SymmetricMatrix::from_lower(m);
  CHECK(lower(0, 1) == lower(1, 0));
}

TEST_CASE("cholesky") {
  SUBCASE("identity") {
    const auto f = cholesky(SymmetricMatrix::identity(5));
    CHECK(f.lower() == Matrix::Identity(5, 5));
  }
  SUBCASE("2x2 closed form") {
    Matrix s(2, 2);
    s << 4, 2, 2, 3;
    const auto f = cholesky(SymmetricMatrix::from_dense(s));
    CHECK(f.lower()(0, 0) == doctest::Approx(2.0));
    CHECK(f.lower()(0, 1) == 0.0);
    CHECK(f.lower()(1, 0) == doctest::Approx(1.0));
    CHECK(f.lower()(1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK((f.lower() * f.lower().transpose() - s).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("singular") {
    Matrix s(2, 2);
    s << 1, 1, 1, 1;
    CHECK(kind_of([&] { (void)cholesky(SymmetricMatrix::from_dense(s)); }) ==
          ErrorKind::NotPositiveDefinite);
  }
  SUBCASE("Wishart reconstruction and triangular solves") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
      const Index n = 2 + t;
      const Matrix b = testing::random_matrix(rng, n, n);
      const auto s = SymmetricMatrix::symmetrized(b.transpose() * b + 0.1 * Matrix::Identity(n, n));
      const auto f = cholesky(s);
      const Matrix& l = f.lower();
      CHECK((l * l.transpose() - s.dense()).cwiseAbs().maxCoeff() <= 1e-12 * s.max_abs());
      CHECK((l.diagonal().array() > 0.0).all());
      const Vector v = testing::random_vector(rng, n);
      CHECK((l * f.solve_lower(v) - v).norm() < 1e-9 * v.norm() * s.max_abs());
      CHECK((l.transpose() * f.solve_upper(v) - v).norm() < 1e-9 * v.norm() * s.max_abs());
      CHECK((f.multiply(v) - l * v).norm() < 1e-12 * v.norm() * l.norm());
      CHECK((f.multiply_transpose(v) - l.transpose() * v).norm() < 1e-12 * v.norm() * l.norm());
    }
  }
}

TEST_CASE("eig_sym") {
  SUBCASE("diagonal") {
    Vector d(3);
    d << 3, 1, 2;
    const auto e = eig_sym(SymmetricMatrix::diagonal(d));
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(2.0));
    CHECK(e.eigenvalues(2) == doctest::Approx(3.0));
  }
  SUBCASE("2x2 and 3x3 closed forms") {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    const auto e = eig_sym(SymmetricMatrix::from_dense(m));
    CHECK(std::abs(e.eigenvalues(0) + 1.0) < 1e-12);
    CHECK(std::abs(e.eigenvalues(1) - 1.0) < 1e-12);

    // [[a,b],[b,c]]: (a+c)/2 ± sqrt(((a−c)/2)² + b²)
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
      const auto s = testing::random_symmetric(rng, 2);
      const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
      const double mid = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
      const auto ev = eig_sym(s).eigenvalues;
      CHECK(std::abs(ev(0) - (mid - rad)) < 1e-12);
      CHECK(std::abs(ev(1) - (mid + rad)) < 1e-12);
    }
    // tridiagonal 2, −1 stencil: 2 − 2cos(kπ/4)
    Matrix t3(3, 3);
    t3 << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    const auto ev = eig_sym(SymmetricMatrix::from_dense(t3)).eigenvalues;
    for (int k = 1; k <= 3; ++k) {
      CHECK(std::abs(ev(k - 1) - (2.0 - 2.0 * std::cos(k * M_PI / 4.0))) < 1e-12);
    }
  }
  SUBCASE("random 16x16 residual and orthogonality") {
    std::mt19937_64 rng(5);
    const auto a = testing::random_symmetric(rng, 16);
    const auto e = eig_sym(a);
    const double norm = spectral_norm(a);
    for (Index i = 0; i < 16; ++i) {
      const Vector r = a.dense() * e.eigenvectors.col(i) - e.eigenvalues(i) * e.eigenvectors.col(i);
      CHECK(r.norm() <= 1e-10 * norm);
      if (i > 0) CHECK(e.eigenvalues(i) >= e.eigenvalues(i - 1));
    }
    const Matrix q = e.eigenvectors;
    CHECK((q.transpose() * q - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("apply_matrix_function") {
  SUBCASE("diagonal action") {
    Vector d(4);
    d << -1, 0.5, 2, 3;
    const auto a = SymmetricMatrix::diagonal(d);
    for (Index i = 0; i < 4; ++i) {
      const Vector e = Vector::Unit(4, i);
      const Vector y = apply_matrix_function(a, [](double x) { return std::exp(x); }, e);
      CHECK((y - std::exp(d(i)) * e).norm() < 1e-12 * std::exp(3.0));
    }
  }
  SUBCASE("identity function equals matvec on 100 random instances") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<Index> dim(1, 64);
    for (int t = 0; t < 100; ++t) {
      const Index n = dim(rng);
      const auto a = testing::random_symmetric(rng, n);
      const Vector v = testing::random_vector(rng, n);
      const Vector y = apply_matrix_function(a, [](double x) { return x; }, v);
      const Vector ref = a.dense() * v;
      CHECK((y - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
    }
  }
  SUBCASE("Fermi-Dirac against an exponential-based oracle") {
    // f(A) = 2 (I + exp(β(A − μI)))⁻¹, exp by scaling and squaring
    std::mt19937_64 rng(23);
    const double mu = 0.2, beta = 1.5;
    for (int t = 0; t < 10; ++t) {
      const auto a = testing::random_symmetric(rng, 8);
      const Vector v = testing::random_vector(rng, 8);
      const Matrix ex = (beta * (a.dense() - mu * Matrix::Identity(8, 8))).exp();
      const Matrix fa = 2.0 * (Matrix::Identity(8, 8) + ex).inverse();
      const Vector y = apply_matrix_function(
          a, [&](double x) { return dftb::fermi_dirac(x, mu, beta); }, v);
      CHECK((y - fa * v).norm() < 1e-10 * v.norm());
    }
  }
}

TEST_CASE("matrix market round trip and format rules") {
  std::mt19937_64 rng(29);
  SUBCASE("round trip is bit exact") {
    auto a = testing::random_symmetric(rng, 4);
    a.set(1, 3, 0.0);
    std::stringstream ss;
    write_matrix_market(a, ss);
    const auto b = read_matrix_market(ss);
    CHECK(a == b);
  }
  SUBCASE("coordinate symmetric header accepted") {
    std::stringstream ss(
        "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 1.5\n2 1 -2\n2 2 "
        "4\n");
    const auto a = read_matrix_market(ss);
    CHECK(a(0, 1) == -2.0);
    CHECK(a(1, 0) == -2.0);
    CHECK(a(1, 1) == 4.0);
  }
  SUBCASE("entry above the diagonal in symmetric format") {
    std::stringstream ss("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n");
    try {
      (void)read_matrix_market(ss);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("array general with symmetry check") {
    std::stringstream ok("%%MatrixMarket matrix array real general\n2 2\n1\n3\n3\n2\n");
    const auto a = read_matrix_market(ok);
    CHECK(a(0, 1) == 3.0);
    std::stringstream bad("%%MatrixMarket matrix array real general\n2 2\n1\n3\n3.0000001\n2\n");
    CHECK(kind_of([&] { (void)read_matrix_market(bad); }) == ErrorKind::AsymmetricInput);
  }
  SUBCASE("malformed") {
    std::stringstream ss("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1 0\n");
    CHECK(kind_of([&] { (void)read_matrix_market(ss); }) == ErrorKind::ParseError);
    std::stringstream dup("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n1 1 2\n");
    CHECK(kind_of([&] { (void)read_matrix_market(dup); }) == ErrorKind::ParseError);
  }
}
