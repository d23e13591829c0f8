#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kkindex/dirac.hpp"
#include "kkindex/limitspace.hpp"
#include "kkindex/rng.hpp"
#include "kkindex/twistgroup.hpp"

namespace kkindex {

// One summand of the j-cycle on (Hermite mode 1..M) (x) SA with
// SA = fermion (x) dual (x) boson: an operator on at most one Hermite mode
// tensored with an operator on SA.
struct JCycleTerm {
  int mode = 0;  // 1..M, or 0 when the Hermite prefix is untouched
  std::optional<SparseOperator> hermite;
  SparseOperator tail;
  std::string name;
};

struct JCycle {
  TruncationSpec spec;
  SpectatorCut cut = SpectatorCut::independent;
  int active = 0;
  int hermite_cut = 0;
  SigmaSequence sigma;
  BasisPtr hermite;
  std::vector<Vector> xi;  // unit Xi_{sigma_n} on the Hermite basis, n = 1..M
  DiracOperator left;      // the operator on SA
  std::vector<JCycleTerm> terms;

  std::size_t prefix_dimension() const;
  std::size_t dimension() const { return prefix_dimension() * left.space.basis()->size(); }
};

// D (x) id + id (x) d_L with D on the active Hermite modes and the fermion
// factor shared with d_L.
JCycle build_j_cycle(const TruncationSpec& spec, int active, const SigmaSequence& sigma, int hermite_cut = 12,
                     SpectatorCut cut = SpectatorCut::independent);

struct MaterializedJCycle {
  TensorSpace space;  // Hermite^M (x) fermion (x) dual (x) boson
  SparseOperator op;
  SparseOperator d_part;  // D (x) id
  SparseOperator l_part;  // id (x) d_L
};

// Explicit sparse matrix of the cycle; throws std::length_error above max_dimension.
MaterializedJCycle materialize(const JCycle& cycle, std::size_t max_dimension = 20000);

enum class IndexSide { kk, analytic };

struct IndexCycle {
  IndexSide side = IndexSide::kk;
  DiracSpace space;
  SparseOperator op;
};

struct AssemblyResult {
  IndexCycle cycle;
  std::vector<double> xi_scalars;  // |<Xi_n, X Xi_n>| for every Hermite operator X in the cycle
  double max_scalar = 0.0;
  std::size_t module_dimension = 0;
};

// Compression by P_Xi (x) id: per-mode scalars <Xi_n, X Xi_n> times the SA operators.
AssemblyResult assemble(const JCycle& cycle);

// V^* M V with V = (Xi_1 (x) ... (x) Xi_M) (x) id_SA, on the explicit matrix.
SparseOperator compress_materialized(const JCycle& cycle, const MaterializedJCycle& m);

// Analytic index cycle: boson (x) dual (x) fermion with d_R; the boson leg
// carries the transpose-twisted right action of the boson matrix algebra.
IndexCycle analytic_index(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::independent);
IndexCycle kk_index(const TruncationSpec& spec, SpectatorCut cut = SpectatorCut::independent);

// Module coordinates in the orthonormal basis. KK side: rows index the
// (dual, fermion) pair, columns the boson label. Analytic side: transposed.
CMatrix module_matrix(const IndexCycle& c, const Vector& v);
Vector module_vector(const IndexCycle& c, const CMatrix& m);
// KK: C b. Analytic: f * b = b^T F.
Vector index_right_action(const IndexCycle& c, const Vector& v, const CMatrix& b);
// KK: C1^H C2. Analytic: (F2 F1^H)^T.
CMatrix index_inner(const IndexCycle& c, const Vector& v1, const Vector& v2);

// Label permutation (boson, dual, fermion) -> (fermion, dual, boson).
SparseOperator transpose_intertwiner(const IndexCycle& analytic, const IndexCycle& kk);

struct IndexComparison {
  double intertwining = 0.0;        // max |U d_R - d_L U|
  double unitarity = 0.0;           // max |U^* U - 1|
  double spectrum_difference = 0.0;
  bool same_dimension = false;
  double bounded_difference = 0.0;  // max |U b(d_R) U^* - b(d_L)|
  double action_defect = 0.0;       // U(f * b) vs U(f) b on random elements
  double inner_defect = 0.0;        // <Uf, Ug> vs <f, g>
  double operator_module_defect = 0.0;  // d(f * b) - d(f) * b
  double vacuum_defect = 0.0;       // U maps vacuum columns to vacuum columns
  std::size_t analytic_kernel = 0;
  std::size_t kk_kernel = 0;
  std::size_t boson_dimension = 0;
  bool module_checked = false;      // module structure needs the independent cut
};

IndexComparison compare_indices(const IndexCycle& analytic, const IndexCycle& kk, SeededRng& rng, int trials = 8);

struct ModuleAxioms {
  double associativity = 0.0;   // (f b1) b2 - f (b1 b2)
  double compatibility = 0.0;   // <f, g b> - <f, g> b
  double hermitian = 0.0;       // <f, g>^* - <g, f>
  double min_eigenvalue = 0.0;  // of <f, f>
};

ModuleAxioms check_module_axioms(const IndexCycle& c, SeededRng& rng, int trials = 8);

// Finite-rank algebra element sum_i theta_{phi_i, psi_i} on the Hermite prefix
// (dense vectors in mixed radix, mode 1 most significant).
struct RankOneTerm {
  CVector phi;
  CVector psi;
};

struct CommutatorReport {
  double measured = 0.0;  // || [d~, a (x) id] ||
  double analytic = 0.0;  // ||psi|| beta(phi) + ||phi|| beta(psi)
  double tail = 0.0;      // 2 ||phi|| ||psi|| sum_{n>M} 2 sqrt(2n) sigma_n
};

CommutatorReport commutator_bound(const std::vector<RankOneTerm>& a, const JCycle& cycle);

// Tensor product Xi_1 (x) ... (x) Xi_M as a prefix vector.
CVector xi_prefix(const JCycle& cycle);

struct ResolventReport {
  std::vector<double> singular_values;  // of (1 + d~^2)^-1 (a (x) id), descending
  std::vector<double> rank_errors;      // best rank-r error for the requested ranks
  std::vector<double> resolvent_bounds; // ||a|| / (1 + mu_j), mu ascending eigenvalues of d~^2
  std::size_t decay_violations = 0;
  double split_residual = 0.0;      // (d~)^2 - (D^2 (x) id + d_2 + id (x) d_L^2), d_2 from the formula, safe columns
  double d1_norm = 0.0, d2_norm = 0.0, d3_norm = 0.0;
  std::size_t dimension = 0;
};

ResolventReport resolvent_compactness(const std::vector<RankOneTerm>& a, const JCycle& cycle,
                                      const std::vector<std::size_t>& ranks);

struct CrossTermRow {
  int mode = 0;
  double measured = 0.0;  // || d_2,n (Xi_n (x) (1 + d_L^2)^-1) ||
  double bound = 0.0;     // n sigma_n (||R_n (1 + d_L^2)^-1|| + ||L_n (1 + d_L^2)^-1||)
};

std::vector<CrossTermRow> cross_term_bounds(const JCycle& cycle);

struct KucerovskyReport {
  std::vector<double> commutator_norms;
  std::vector<double> commutator_bounds;
  double positivity_min = 0.0;  // min eigenvalue of the symmetrized form
};

// Generators are prefix vectors e; T_e : x -> e (x) x. The left class is the
// Mishchenko projection with zero operator.
KucerovskyReport kucerovsky_check(const JCycle& cycle, const std::vector<CVector>& generators);

// Finite abelian group model: L^2(G) (x) S (x) A_tau with A_tau the level-1
// functions on the extension, S a spinor module for the rank of G.
struct FiniteModel {
  ExtensionPtr ext;
  std::size_t rank = 0;
  BasisPtr spinor;
  std::vector<CMatrix> clifford;  // c_i, skew, c_i^2 = -1
  std::vector<CMatrix> x;         // (R_{e_i} - R_{-e_i}) / 2 on l^2(G)
  std::vector<CMatrix> y_left;    // (lambda_{e_i} - lambda_{e_i}^-1) / 2 on level-1 functions
  std::vector<CMatrix> y_right;   // (rho_{e_i} - rho_{e_i}^-1) / 2 on level -1 functions
  CMatrix phi;                    // f -> f(x^-1), level -1 to level 1
};

FiniteModel build_finite_model(const Cocycle& tau);
CMatrix finite_dirac_L(const FiniteModel& m);   // on S (x) A
CMatrix finite_dirac_R(const FiniteModel& m);   // on A_{-tau} (x) S
CMatrix finite_j_cycle(const FiniteModel& m);   // on l^2(G) (x) S (x) A

struct FiniteAssemblyReport {
  std::string group;
  double compression_residual = 0.0;  // |V^* d~ V - d_L|
  double spectrum_difference = 0.0;   // spectra of V^* d~ V and d_L
  double projection_defect = 0.0;     // schatten(mishchenko(1/|G|)) vs |sqrt c><sqrt c|
  double intertwining = 0.0;          // (swap Phi) d_R - d_L (swap Phi)
  double analytic_spectrum_difference = 0.0;
  double clifford_defect = 0.0;
  double self_adjoint_defect = 0.0;
  std::size_t j_dimension = 0, module_dimension = 0;
};

FiniteAssemblyReport finite_assembly(const Cocycle& tau);

struct LevelCompressionRow {
  int level = 0;
  double compression = 0.0;         // norm of the level-k part of the Mishchenko vector
  double crossed_projection = 0.0;  // level-k part of the pulled-back Mishchenko element
};

std::vector<LevelCompressionRow> level_compression(const Cocycle& tau);

}  // namespace kkindex
