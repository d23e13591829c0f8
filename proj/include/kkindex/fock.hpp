#pragma once

#include <map>
#include <string>
#include <vector>

#include "kkindex/opcore.hpp"
#include "kkindex/tensor.hpp"

namespace kkindex {

struct TruncationSpec {
  int max_mode = 4;      // N_max
  int max_energy = 8;    // E_max
  double tolerance = default_tolerance;

  void validate() const;
};

enum class FockKind { boson, dual_boson, fermion };

std::string kind_name(FockKind kind);
FockKind kind_from_basis(const Basis& basis);

// Boson or dual-boson monomial: mode -> multiplicity (absent = 0).
struct OccupationState {
  std::map<int, int> occupations;
  int energy() const;
  Label encode(int max_mode) const;
  static OccupationState decode(const Label& label);
};

// Fermion monomial: strictly increasing mode list.
struct SpinorState {
  std::vector<int> indices;
  int energy() const;
  Label encode(int max_mode) const;
  static SpinorState decode(const Label& label);
};

int label_energy(FockKind kind, const Label& label);
double label_gram(FockKind kind, const Label& label);

BasisPtr enumerate_basis(const TruncationSpec& spec, FockKind kind);

// Sub-basis of states with energy at most `max_energy` (same kind and width).
BasisPtr energy_subbasis(const BasisPtr& basis, int max_energy);

// Ladder operators. The single-basis overloads act within one basis; the
// two-basis forms map between truncations of the same kind.
SparseOperator boson_raise(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode);
SparseOperator boson_lower(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode);
SparseOperator dual_raise(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode);
SparseOperator dual_lower(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode);

inline SparseOperator boson_raise(int n, const BasisPtr& b, TruncationMode mode = TruncationMode::compressed) {
  return boson_raise(n, b, b, mode);
}
inline SparseOperator boson_lower(int n, const BasisPtr& b, TruncationMode mode = TruncationMode::compressed) {
  return boson_lower(n, b, b, mode);
}
inline SparseOperator dual_raise(int n, const BasisPtr& b, TruncationMode mode = TruncationMode::compressed) {
  return dual_raise(n, b, b, mode);
}
inline SparseOperator dual_lower(int n, const BasisPtr& b, TruncationMode mode = TruncationMode::compressed) {
  return dual_lower(n, b, b, mode);
}

// Diagonal i * (weighted energy) on a boson or dual-boson basis.
SparseOperator energy_op(const BasisPtr& basis);

enum class CliffordType { holo, antiholo };  // gamma(z_n), gamma(zbar_n)

SparseOperator clifford(int n, CliffordType type, const BasisPtr& domain, const BasisPtr& codomain,
                        TruncationMode mode);
inline SparseOperator clifford(int n, CliffordType type, const BasisPtr& b,
                               TruncationMode mode = TruncationMode::compressed) {
  return clifford(n, type, b, b, mode);
}

SparseOperator number_op(const BasisPtr& basis);

// Columns whose energy is at most `max_energy`.
std::vector<bool> energy_mask(const Basis& basis, int max_energy);

// Largest entry of `a` restricted to masked columns.
double masked_max_abs(const SparseOperator& a, const std::vector<bool>& keep);

}  // namespace kkindex
