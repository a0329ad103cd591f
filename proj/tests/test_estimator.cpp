#include <cmath>
#include <random>
#include <set>

#include <doctest.h>

#include "sscf/error.hpp"
#include "sscf/estimator.hpp"
#include "test_support.hpp"

using namespace sscf;
using namespace sscf::estimator;

TEST_CASE("draw_probe") {
  const ProbeDistribution rad{ProbeKind::Rademacher, 4};
  const RngStream s{42, 3, 1};
  const Vector v = draw_probe(rad, s);
  CHECK(v.size() == 4);
  for (Index i = 0; i < 4; ++i) CHECK(std::abs(v(i)) == 1.0);
  CHECK(draw_probe(rad, s) == v);
  const Vector g = draw_probe({ProbeKind::Gaussian, 5}, s);
  CHECK(g == draw_probe({ProbeKind::Gaussian, 5}, s));
  CHECK(g.size() == 5);
}

TEST_CASE("second moment is the identity") {
  const ProbeDistribution rad{ProbeKind::Rademacher, 8};
  Matrix acc = Matrix::Zero(8, 8);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vector v = draw_probe(rad, {9, static_cast<std::uint64_t>(i), 0});
    acc += v * v.transpose();
  }
  acc /= n;
  CHECK((acc - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("streams at distinct indices are uncorrelated") {
  const ProbeDistribution rad{ProbeKind::Rademacher, 1};
  const int n = 10000;
  double c01 = 0, c10 = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    const double a = draw_probe(rad, {5, k, 0})(0);
    c01 += a * draw_probe(rad, {5, k, 1})(0);
    c10 += a * draw_probe(rad, {5, k + 1, 0})(0);
  }
  CHECK(std::abs(c01 / n) <= 0.05);
  CHECK(std::abs(c10 / n) <= 0.05);
}

TEST_CASE("diag_estimate") {
  std::mt19937_64 rng(1);
  SUBCASE("diagonal matrix is recovered exactly with zero variance") {
    const Vector d = testing::random_vector(rng, 6);
    const auto apply = [&](const Vector& v) { return Vector(d.cwiseProduct(v)); };
    const auto est = diag_estimate(apply, {ProbeKind::Rademacher, 6}, 7, {1, 0, 0});
    CHECK((est.mean - d).cwiseAbs().maxCoeff() == 0.0);
    CHECK(est.variance.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("variance formula on the all-ones matrix") {
    Matrix a(2, 2);
    a << 1, 1, 1, 1;
    const auto apply = [&](const Vector& v) { return Vector(a * v); };
    const auto est = diag_estimate(apply, {ProbeKind::Rademacher, 2}, 100000, {2, 0, 0});
    CHECK(est.variance.sum() == doctest::Approx(2.0).epsilon(0.05));
    CHECK((est.mean - Vector::Ones(2)).cwiseAbs().maxCoeff() < 0.02);
  }
  SUBCASE("variance formula on random 8x8 matrices") {
    for (int t = 0; t < 20; ++t) {
      const Matrix a = testing::random_matrix(rng, 8, 8);
      const auto apply = [&](const Vector& v) { return Vector(a * v); };
      const auto est = diag_estimate(apply, {ProbeKind::Rademacher, 8}, 100000,
                                     {static_cast<std::uint64_t>(t), 0, 0});
      // Var((Av⊙v)_i) = Σ_{j≠i} A_ij²
      const double expected = a.squaredNorm() - a.diagonal().squaredNorm();
      CHECK(est.variance.sum() == doctest::Approx(expected).epsilon(0.05));
    }
  }
  SUBCASE("exhaustive enumeration is exact") {
    for (Index n = 1; n <= 10; ++n) {
      const Matrix a = testing::random_matrix(rng, n, n);
      Vector sum = Vector::Zero(n);
      const auto all = enumerate_rademacher(n);
      for (const auto& v : all) sum += (a * v).cwiseProduct(v);
      sum /= static_cast<double>(all.size());
      CHECK((sum - a.diagonal()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("reduction order does not depend on anything but the stream") {
    const Matrix a = testing::random_matrix(rng, 5, 5);
    const auto apply = [&](const Vector& v) { return Vector(a * v); };
    const auto e1 = diag_estimate(apply, {ProbeKind::Gaussian, 5}, 16, {3, 4, 0});
    const auto e2 = diag_estimate(apply, {ProbeKind::Gaussian, 5}, 16, {3, 4, 0});
    CHECK(e1.mean == e2.mean);
    CHECK(e1.variance == e2.variance);
  }
}

TEST_CASE("enumerate_rademacher") {
  auto one = enumerate_rademacher(1);
  REQUIRE(one.size() == 2);
  CHECK(one[0](0) == 1.0);
  CHECK(one[1](0) == -1.0);
  CHECK(enumerate_rademacher(2).size() == 4);
  const auto three = enumerate_rademacher(3);
  REQUIRE(three.size() == 8);
  std::set<std::vector<double>> seen;
  for (const auto& v : three) seen.insert(std::vector<double>(v.data(), v.data() + v.size()));
  CHECK(seen.size() == 8);
  CHECK(three[1] == (Vector(3) << 1, 1, -1).finished());
  try {
    (void)enumerate_rademacher(13);
    FAIL("expected DimensionTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionTooLarge);
  }
}
