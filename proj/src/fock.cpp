#include "kkindex/fock.hpp"

#include <cmath>
#include <stdexcept>

namespace kkindex {

void TruncationSpec::validate() const {
  if (max_mode < 1) throw std::invalid_argument("TruncationSpec: max_mode must be >= 1");
  if (max_energy < 0) throw std::invalid_argument("TruncationSpec: max_energy must be >= 0");
  if (!(tolerance > 0.0)) throw std::invalid_argument("TruncationSpec: tolerance must be positive");
}

std::string kind_name(FockKind kind) {
  switch (kind) {
    case FockKind::boson: return "boson";
    case FockKind::dual_boson: return "dual_boson";
    case FockKind::fermion: return "fermion";
  }
  return "?";
}

FockKind kind_from_basis(const Basis& basis) {
  if (basis.layout().size() != 1) throw BasisMismatch("expected a single-factor Fock basis, got " + basis.kind());
  const std::string& k = basis.layout()[0].kind;
  if (k == "boson") return FockKind::boson;
  if (k == "dual_boson") return FockKind::dual_boson;
  if (k == "fermion") return FockKind::fermion;
  throw BasisMismatch("not a Fock basis: " + k);
}

int OccupationState::energy() const {
  int e = 0;
  for (auto [n, k] : occupations) e += n * k;
  return e;
}

Label OccupationState::encode(int max_mode) const {
  Label l(static_cast<std::size_t>(max_mode), 0);
  for (auto [n, k] : occupations) {
    if (n < 1 || n > max_mode) throw std::out_of_range("OccupationState: mode outside range");
    if (k < 0) throw std::invalid_argument("OccupationState: negative multiplicity");
    l[static_cast<std::size_t>(n - 1)] = k;
  }
  return l;
}

OccupationState OccupationState::decode(const Label& label) {
  OccupationState s;
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i] > 0) s.occupations[static_cast<int>(i) + 1] = label[i];
  return s;
}

int SpinorState::energy() const {
  int e = 0;
  for (int n : indices) e += n;
  return e;
}

Label SpinorState::encode(int max_mode) const {
  Label l(static_cast<std::size_t>(max_mode), 0);
  int prev = 0;
  for (int n : indices) {
    if (n <= prev) throw std::invalid_argument("SpinorState: indices must be strictly increasing and positive");
    if (n > max_mode) throw std::out_of_range("SpinorState: mode outside range");
    l[static_cast<std::size_t>(n - 1)] = 1;
    prev = n;
  }
  return l;
}

SpinorState SpinorState::decode(const Label& label) {
  SpinorState s;
  for (std::size_t i = 0; i < label.size(); ++i)
    if (label[i]) s.indices.push_back(static_cast<int>(i) + 1);
  return s;
}

int label_energy(FockKind, const Label& label) {
  int e = 0;
  for (std::size_t i = 0; i < label.size(); ++i) e += static_cast<int>(i + 1) * label[i];
  return e;
}

double label_gram(FockKind kind, const Label& label) {
  if (kind == FockKind::fermion) return 1.0;
  double g = 1.0;
  for (int k : label) g *= std::tgamma(static_cast<double>(k) + 1.0);
  return g;
}

BasisPtr enumerate_basis(const TruncationSpec& spec, FockKind kind) {
  spec.validate();
  std::vector<Label> labels;
  Label cur(static_cast<std::size_t>(spec.max_mode), 0);
  int max_occ = kind == FockKind::fermion ? 1 : spec.max_energy;
  auto recurse = [&](auto&& self, int mode, int remaining) -> void {
    if (mode > spec.max_mode) {
      labels.push_back(cur);
      return;
    }
    for (int k = 0; k <= max_occ && k * mode <= remaining; ++k) {
      cur[static_cast<std::size_t>(mode - 1)] = k;
      self(self, mode + 1, remaining - k * mode);
    }
    cur[static_cast<std::size_t>(mode - 1)] = 0;
  };
  recurse(recurse, 1, spec.max_energy);
  std::vector<double> gram;
  std::vector<int> energy;
  for (const auto& l : labels) {
    gram.push_back(label_gram(kind, l));
    energy.push_back(label_energy(kind, l));
  }
  FactorLayout layout{kind_name(kind), static_cast<std::size_t>(spec.max_mode), kind == FockKind::fermion};
  return std::make_shared<const Basis>(std::vector<FactorLayout>{layout}, std::move(labels), std::move(gram),
                                       std::move(energy));
}

BasisPtr energy_subbasis(const BasisPtr& basis, int max_energy) {
  std::vector<Label> labels;
  std::vector<double> gram;
  std::vector<int> energy;
  for (std::size_t i = 0; i < basis->size(); ++i) {
    if (basis->energy(i) > max_energy) continue;
    labels.push_back(basis->label(i));
    gram.push_back(basis->gram(i));
    energy.push_back(basis->energy(i));
  }
  return std::make_shared<const Basis>(basis->layout(), std::move(labels), std::move(gram), std::move(energy));
}

namespace {

void require_kind(const BasisPtr& b, FockKind kind, const char* where) {
  if (kind_from_basis(*b) != kind)
    throw BasisMismatch(std::string(where) + ": expected a " + kind_name(kind) + " basis, got " + b->kind());
}

void require_mode(int n, const BasisPtr& b, const char* where) {
  if (n < 1 || static_cast<std::size_t>(n) > b->layout()[0].width)
    throw std::out_of_range(std::string(where) + ": mode index outside the truncation");
}

// Shared kernel of every single-mode ladder operator: `step` returns the new
// occupation and the coefficient, or coefficient 0 to annihilate.
template <class Step>
SparseOperator ladder(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode, Grade grade,
                      Step step) {
  std::vector<SparseOperator::Entry> entries;
  std::size_t pos = static_cast<std::size_t>(n - 1);
  for (std::size_t c = 0; c < domain->size(); ++c) {
    Label l = domain->label(c);
    auto [occ, coef] = step(l, pos);
    if (coef == Complex(0.0)) continue;
    l[pos] = occ;
    std::size_t r = codomain->find(l);
    if (r == Basis::npos) {
      if (mode == TruncationMode::strict) throw TruncationOverflow("ladder operator: image leaves the truncation");
      continue;
    }
    entries.push_back({r, c, coef});
  }
  return SparseOperator::from_entries(domain, codomain, entries, grade);
}

std::pair<int, Complex> raise_step(const Label& l, std::size_t pos) { return {l[pos] + 1, 1.0}; }
std::pair<int, Complex> lower_step(const Label& l, std::size_t pos) {
  return {l[pos] - 1, Complex(-static_cast<double>(l[pos]))};
}

}  // namespace

SparseOperator boson_raise(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode) {
  require_kind(domain, FockKind::boson, "boson_raise");
  require_kind(codomain, FockKind::boson, "boson_raise");
  require_mode(n, domain, "boson_raise");
  return ladder(n, domain, codomain, mode, Grade::even, raise_step);
}

SparseOperator boson_lower(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode) {
  require_kind(domain, FockKind::boson, "boson_lower");
  require_kind(codomain, FockKind::boson, "boson_lower");
  require_mode(n, domain, "boson_lower");
  return ladder(n, domain, codomain, mode, Grade::even, lower_step);
}

SparseOperator dual_raise(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode) {
  require_kind(domain, FockKind::dual_boson, "dual_raise");
  require_kind(codomain, FockKind::dual_boson, "dual_raise");
  require_mode(n, domain, "dual_raise");
  return ladder(n, domain, codomain, mode, Grade::even, raise_step);
}

SparseOperator dual_lower(int n, const BasisPtr& domain, const BasisPtr& codomain, TruncationMode mode) {
  require_kind(domain, FockKind::dual_boson, "dual_lower");
  require_kind(codomain, FockKind::dual_boson, "dual_lower");
  require_mode(n, domain, "dual_lower");
  return ladder(n, domain, codomain, mode, Grade::even, lower_step);
}

SparseOperator energy_op(const BasisPtr& basis) {
  FockKind k = kind_from_basis(*basis);
  if (k == FockKind::fermion) throw BasisMismatch("energy_op: expected a boson or dual-boson basis");
  std::vector<Complex> diag(basis->size());
  for (std::size_t i = 0; i < basis->size(); ++i) diag[i] = Complex(0.0, basis->energy(i));
  return SparseOperator::diagonal(basis, diag);
}

SparseOperator clifford(int n, CliffordType type, const BasisPtr& domain, const BasisPtr& codomain,
                        TruncationMode mode) {
  require_kind(domain, FockKind::fermion, "clifford");
  require_kind(codomain, FockKind::fermion, "clifford");
  require_mode(n, domain, "clifford");
  const double root2 = std::sqrt(2.0);
  return ladder(n, domain, codomain, mode, Grade::odd, [&](const Label& l, std::size_t pos) -> std::pair<int, Complex> {
    int below = 0;
    for (std::size_t i = 0; i < pos; ++i) below += l[i];
    double sign = (below & 1) ? -1.0 : 1.0;
    if (type == CliffordType::antiholo) {
      if (l[pos]) return {0, 0.0};
      return {1, sign * root2};
    }
    if (!l[pos]) return {0, 0.0};
    return {0, -sign * root2};
  });
}

SparseOperator number_op(const BasisPtr& basis) {
  require_kind(basis, FockKind::fermion, "number_op");
  std::vector<Complex> diag(basis->size());
  for (std::size_t i = 0; i < basis->size(); ++i) diag[i] = static_cast<double>(basis->energy(i));
  return SparseOperator::diagonal(basis, diag);
}

std::vector<bool> energy_mask(const Basis& basis, int max_energy) {
  std::vector<bool> keep(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) keep[i] = basis.energy(i) <= max_energy;
  return keep;
}

double masked_max_abs(const SparseOperator& a, const std::vector<bool>& keep) {
  double m = 0.0;
  for (const auto& e : a.entries())
    if (keep.at(e.col)) m = std::max(m, std::abs(e.value));
  return m;
}

}  // namespace kkindex
