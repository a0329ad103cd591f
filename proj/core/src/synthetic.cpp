#include "sscf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "sscf/error.hpp"

namespace sscf::dftb {

namespace {

using nlohmann::json;

constexpr double kNeighborFactor = 1.1;

Matrix honeycomb_positions(Index atoms, double d) {
  const double h = std::sqrt(3.0) / 2.0 * d;
  const int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(atoms)))) + 2;
  struct Site {
    double x, y, key, angle;
  };
  std::vector<Site> sites;
  for (int i = -r; i <= r; ++i) {
    for (int j = -r; j <= r; ++j) {
      for (int b = 0; b < 2; ++b) {
        // centre the flake on the midpoint of a bond
        const double x = 1.5 * d * (i + j) + b * d - 0.5 * d;
        const double y = h * (i - j);
        const double r2 = std::round((x * x + y * y) * 1e9) / 1e9;
        sites.push_back({x, y, r2, std::atan2(y, x)});
      }
    }
  }
  std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.angle < b.angle;
  });
  Matrix pos(atoms, 2);
  for (Index k = 0; k < atoms; ++k) {
    pos(k, 0) = sites[static_cast<std::size_t>(k)].x;
    pos(k, 1) = sites[static_cast<std::size_t>(k)].y;
  }
  return pos;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto check = [](bool ok, const char* what) { require(ok, ErrorKind::InvalidArgument, what); };
  check(atoms >= 1, "atoms must be >= 1");
  check(orbitals_per_atom >= 1, "orbitals_per_atom must be >= 1");
  check(std::isfinite(hopping) && std::isfinite(onsite), "hopping and onsite must be finite");
  check(std::isfinite(onsite_disorder) && onsite_disorder >= 0.0, "onsite_disorder must be >= 0");
  check(std::isfinite(overlap) && overlap >= 0.0, "overlap must be >= 0");
  check(std::isfinite(coulomb_softening) && coulomb_softening > 0.0,
        "coulomb_softening must be > 0");
  check(std::isfinite(hubbard_u), "hubbard_u must be finite");
  check(std::isfinite(mu), "mu must be finite");
  check(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
  check(std::isfinite(spacing) && spacing > 0.0, "spacing must be > 0");
  check(std::isfinite(orbital_splitting), "orbital_splitting must be finite");
  check(gamma_sign == 1.0 || gamma_sign == -1.0, "gamma_sign must be +1 or -1");
  check(std::isfinite(q0), "q0 must be finite");
}

std::string to_string(Lattice lattice) {
  return lattice == Lattice::Honeycomb ? "honeycomb" : "chain";
}

Lattice lattice_from_string(const std::string& s) {
  if (s == "honeycomb") return Lattice::Honeycomb;
  if (s == "chain") return Lattice::Chain;
  fail(ErrorKind::InvalidArgument, "unknown lattice '" + s + "'");
}

Matrix lattice_positions(Lattice lattice, Index atoms, double spacing) {
  if (lattice == Lattice::Honeycomb) return honeycomb_positions(atoms, spacing);
  Matrix pos = Matrix::Zero(atoms, 2);
  for (Index i = 0; i < atoms; ++i) pos(i, 0) = static_cast<double>(i) * spacing;
  return pos;
}

TightBindingSystem generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Index n = spec.atoms;
  const Index m = spec.orbitals_per_atom;
  const Matrix pos = lattice_positions(spec.lattice, n, spec.spacing);

  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(spec.seed >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  Vector disorder(n);
  for (Index j = 0; j < n; ++j) disorder(j) = spec.onsite_disorder * shift(rng);

  const Index dim = n * m;
  Matrix h0 = Matrix::Zero(dim, dim);
  Matrix s = Matrix::Identity(dim, dim);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < m; ++k) {
      const double level = static_cast<double>(k) - 0.5 * static_cast<double>(m - 1);
      h0(j * m + k, j * m + k) = spec.onsite + disorder(j) + level * spec.orbital_splitting;
    }
  }

  Matrix gamma(n, n);
  for (Index i = 0; i < n; ++i) {
    gamma(i, i) = spec.gamma_sign * spec.hubbard_u;
    for (Index j = 0; j < i; ++j) {
      const double r = (pos.row(i) - pos.row(j)).norm();
      const double g = spec.gamma_sign / std::sqrt(r * r + spec.coulomb_softening *
                                                                spec.coulomb_softening);
      gamma(i, j) = g;
      gamma(j, i) = g;
      if (r < kNeighborFactor * spec.spacing) {
        for (Index k = 0; k < m; ++k) {
          for (Index kk = 0; kk < m; ++kk) {
            const double w = k == kk ? 1.0 : 0.5;
            const Index a = i * m + k;
            const Index b = j * m + kk;
            h0(a, b) = h0(b, a) = -spec.hopping * w;
            s(a, b) = s(b, a) = spec.overlap * w;
          }
        }
      }
    }
  }

  TightBindingSystem sys;
  sys.partition = OrbitalPartition::uniform(n, m);
  sys.h0 = SymmetricMatrix::from_dense(h0);
  sys.s = SymmetricMatrix::from_dense(s);
  sys.gamma = SymmetricMatrix::from_dense(gamma);
  sys.q0 = Vector::Constant(n, spec.q0 < 0.0 ? static_cast<double>(m) : spec.q0);
  sys.mu = spec.mu;
  sys.beta = spec.beta;
  sys.name = spec.name.empty() ? to_string(spec.lattice) + "-" + std::to_string(n) : spec.name;
  sys.generator_spec_json = spec_to_json(spec);

  try {
    (void)cholesky(sys.s);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    fail(ErrorKind::OverlapNotSPD,
         "overlap " + std::to_string(spec.overlap) + " is not positive definite on this geometry");
  }
  return sys;
}

std::string spec_to_json(const SyntheticSpec& spec) {
  json j;
  j["lattice"] = to_string(spec.lattice);
  j["atoms"] = spec.atoms;
  j["orbitals_per_atom"] = spec.orbitals_per_atom;
  j["hopping"] = spec.hopping;
  j["onsite"] = spec.onsite;
  j["onsite_disorder"] = spec.onsite_disorder;
  j["overlap"] = spec.overlap;
  j["coulomb_softening"] = spec.coulomb_softening;
  j["hubbard_u"] = spec.hubbard_u;
  j["q0"] = spec.q0;
  j["mu"] = spec.mu;
  j["beta"] = spec.beta;
  j["seed"] = spec.seed;
  j["spacing"] = spec.spacing;
  j["orbital_splitting"] = spec.orbital_splitting;
  j["gamma_sign"] = spec.gamma_sign;
  j["name"] = spec.name;
  return j.dump();
}

SyntheticSpec spec_from_json(const std::string& text) {
  SyntheticSpec s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("generator spec: ") + e.what());
  }
  require(j.is_object(), ErrorKind::InvalidArgument, "generator spec must be a JSON object");
  try {
    if (j.contains("lattice")) s.lattice = lattice_from_string(j["lattice"].get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
    };
    get("atoms", s.atoms);
    get("orbitals_per_atom", s.orbitals_per_atom);
    get("hopping", s.hopping);
    get("onsite", s.onsite);
    get("onsite_disorder", s.onsite_disorder);
    get("overlap", s.overlap);
    get("coulomb_softening", s.coulomb_softening);
    get("hubbard_u", s.hubbard_u);
    get("q0", s.q0);
    get("mu", s.mu);
    get("beta", s.beta);
    get("seed", s.seed);
    get("spacing", s.spacing);
    get("orbital_splitting", s.orbital_splitting);
    get("gamma_sign", s.gamma_sign);
    get("name", s.name);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace sscf::dftb
