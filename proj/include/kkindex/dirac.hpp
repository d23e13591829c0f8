#pragma once

#include <map>
#include <vector>

#include "kkindex/fock.hpp"

namespace kkindex {

// right: boson (x) dual (x) fermion; left: fermion (x) dual (x) boson.
enum class Handedness { right, left };

// joint: all three factor energies share the cap. independent: the boson
// factor (acted on by the identity) is capped on its own and the
// dual (x) fermion pair shares the cap.
enum class SpectatorCut { joint, independent };

struct DiracSpace {
  TruncationSpec spec;
  Handedness hand = Handedness::right;
  SpectatorCut cut = SpectatorCut::joint;
  TensorSpace space;
  BasisPtr boson, dual, fermion;
  std::size_t boson_factor = 0, dual_factor = 1, fermion_factor = 2;

  const BasisPtr& basis() const { return space.basis; }
  // Energy of the dual and fermion legs of a product label.
  int pair_energy(std::size_t index) const;
  int fermion_energy(std::size_t index) const;
  int dual_energy(std::size_t index) const;
  int boson_energy(std::size_t index) const;
};

DiracSpace make_dirac_space(const TruncationSpec& spec, Handedness hand, SpectatorCut cut = SpectatorCut::joint);

struct DiracOperator {
  DiracSpace space;
  SparseOperator op;
};

DiracOperator build_dirac_R(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::joint);
DiracOperator build_dirac_L(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::joint);
DiracOperator build_dirac(const DiracSpace& space);

// 2 (N + dual energy), diagonal on the product basis.
SparseOperator weitzenbock_rhs(const DiracSpace& space);

double weitzenbock_residual(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::joint);

// Orthonormal (Gram) basis of the eigenspace |lambda| <= rel_tol * max|lambda|.
std::vector<Vector> kernel(const SparseOperator& a, double rel_tol = 1e-9);

struct EstimateShell {
  int lambda_sq = 0;       // eigenvalue of the Dirac square on the shell
  std::size_t states = 0;
  double max_ratio_lower = 0.0;
  double bound_lower = 0.0;
  double max_ratio_raise = 0.0;
  double bound_raise = 0.0;
};

struct EstimateReport {
  int mode = 1;
  std::vector<EstimateShell> shells;
  std::size_t violations = 0;
  std::size_t equality_states = 0;   // single-mode dual monomials tested for equality
  double equality_defect = 0.0;      // max |ratio - bound| on them
  double max_ratio = 0.0;
};

// Scans every dual (x) fermion basis state with 2 * energy <= 2 * spec.max_energy
// (boson leg in the vacuum) and compares the lowering and raising ratios
// with the energy bounds.
EstimateReport per_estimate(const TruncationSpec& spec, int n);

// b(x) = x / sqrt(1 + x^2) by spectral calculus.
SparseOperator bounded_transform(const SparseOperator& a, double tol = default_tolerance);

// Multiplicity of each eigenvalue 2e of the Dirac square predicted by
// counting weighted partitions (bosons, duals) and distinct partitions (fermions).
std::map<int, std::size_t> predicted_square_multiplicities(const DiracSpace& space);

struct SpectrumRow {
  double eigenvalue = 0.0;
  std::size_t multiplicity = 0;
  std::size_t predicted = 0;
  bool match = false;
};

std::vector<SpectrumRow> square_spectrum_report(const DiracOperator& dirac);

// Weighted partition counts p(w) with parts <= max_part (distinct parts when
// `distinct`), for w = 0..max_weight.
std::vector<std::size_t> partition_counts(int max_part, int max_weight, bool distinct);

}  // namespace kkindex
