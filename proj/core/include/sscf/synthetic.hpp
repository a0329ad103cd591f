#pragma once

// Small tight-binding systems on a honeycomb flake or a linear chain, for
// tests and desk-scale experiments.

#include <cstdint>
#include <string>

#include "sscf/dftb.hpp"

namespace sscf::dftb {

enum class Lattice { Honeycomb, Chain };

struct SyntheticSpec {
  Lattice lattice = Lattice::Honeycomb;
  Index atoms = 32;
  Index orbitals_per_atom = 1;
  double hopping = 1.0;            // t; neighbor hopping is −t
  double onsite = 0.0;             // ε₀
  double onsite_disorder = 0.3;    // per-atom shift drawn uniformly from ±disorder
  double overlap = 0.1;            // s
  double coulomb_softening = 1.0;  // σ
  double hubbard_u = 16.0;         // U
  double q0 = -1.0;                // reference charge per atom; < 0 means orbitals_per_atom
  double mu = 0.0;
  double beta = 0.1;
  std::uint64_t seed = 0;
  double spacing = 1.4203;
  double orbital_splitting = 0.5;  // level spacing between orbitals of one atom
  // γ is stored with this sign applied. −1 gives a screening kernel under
  // Δq = q0 − q (electron counts carry negative charge).
  double gamma_sign = -1.0;
  std::string name;

  void validate() const;  // InvalidArgument
};

std::string to_string(Lattice lattice);
Lattice lattice_from_string(const std::string& s);  // InvalidArgument

// Positions of the first `atoms` sites, nearest to the flake centre first.
Matrix lattice_positions(Lattice lattice, Index atoms, double spacing);

// OverlapNotSPD when the requested overlap is not positive definite.
TightBindingSystem generate_synthetic(const SyntheticSpec& spec);

std::string spec_to_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const std::string& json);  // InvalidArgument

}  // namespace sscf::dftb
