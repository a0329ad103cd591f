#pragma once

// Random inputs shared by the unit and acceptance tests.

#include <random>

#include <Eigen/Dense>

#include "sscf/dftb.hpp"

namespace sscf::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n) { return random_matrix(rng, n, 1); }

inline SymmetricMatrix random_symmetric(std::mt19937_64& rng, Index n) {
  const Matrix b = random_matrix(rng, n, n);
  return SymmetricMatrix::symmetrized(b);
}

// I + small Wishart term: comfortably SPD.
inline SymmetricMatrix random_spd(std::mt19937_64& rng, Index n, double strength = 0.2) {
  const Matrix b = random_matrix(rng, n, n);
  Matrix s = Matrix::Identity(n, n) + strength * b.transpose() * b / static_cast<double>(n);
  return SymmetricMatrix::symmetrized(s);
}

// A valid system with M ≤ max_orbitals, 1–3 orbitals per atom.
inline dftb::TightBindingSystem random_system(std::mt19937_64& rng, Index max_orbitals) {
  std::uniform_int_distribution<Index> per_atom(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Index> counts;
  Index total = 0;
  const Index target = std::uniform_int_distribution<Index>(2, max_orbitals)(rng);
  while (true) {
    const Index c = per_atom(rng);
    if (total + c > target) break;
    counts.push_back(c);
    total += c;
  }
  if (counts.empty()) {
    counts.push_back(1);
    total = 1;
  }
  dftb::TightBindingSystem sys;
  sys.partition = dftb::OrbitalPartition(counts);
  const Index n = static_cast<Index>(counts.size());
  sys.h0 = random_symmetric(rng, total);
  sys.s = random_spd(rng, total);
  sys.gamma = SymmetricMatrix::symmetrized(0.3 * random_matrix(rng, n, n));
  sys.q0 = Vector(n);
  for (Index j = 0; j < n; ++j) sys.q0(j) = static_cast<double>(counts[static_cast<std::size_t>(j)]) * (0.5 + u(rng));
  sys.mu = u(rng) - 0.5;
  sys.beta = 0.5 + 4.5 * u(rng);
  sys.name = "random";
  return sys;
}

}  // namespace sscf::testing
