#include "kkindex/dirac.hpp"

#include <algorithm>
#include <cmath>

namespace kkindex {

namespace {

int segment_energy(const DiracSpace& s, std::size_t index, std::size_t factor) {
  return label_energy(FockKind::boson, s.space.segment(s.basis()->label(index), factor));
}

}  // namespace

int DiracSpace::fermion_energy(std::size_t index) const { return segment_energy(*this, index, fermion_factor); }
int DiracSpace::dual_energy(std::size_t index) const { return segment_energy(*this, index, dual_factor); }
int DiracSpace::boson_energy(std::size_t index) const { return segment_energy(*this, index, boson_factor); }
int DiracSpace::pair_energy(std::size_t index) const { return fermion_energy(index) + dual_energy(index); }

DiracSpace make_dirac_space(const TruncationSpec& spec, Handedness hand, SpectatorCut cut) {
  spec.validate();
  DiracSpace s;
  s.spec = spec;
  s.hand = hand;
  s.cut = cut;
  s.boson = enumerate_basis(spec, FockKind::boson);
  s.dual = enumerate_basis(spec, FockKind::dual_boson);
  s.fermion = enumerate_basis(spec, FockKind::fermion);
  std::vector<BasisPtr> factors;
  if (hand == Handedness::right) {
    factors = {s.boson, s.dual, s.fermion};
    s.boson_factor = 0;
    s.fermion_factor = 2;
  } else {
    factors = {s.fermion, s.dual, s.boson};
    s.boson_factor = 2;
    s.fermion_factor = 0;
  }
  s.dual_factor = 1;
  EnergyCap cap;
  cap.cap = spec.max_energy;
  cap.counted.assign(3, true);
  // The boson basis already respects the cap on its own.
  if (cut == SpectatorCut::independent) cap.counted[s.boson_factor] = false;
  s.space = tensor_space(factors, cap);
  return s;
}

DiracOperator build_dirac(const DiracSpace& s) {
  const int N = s.spec.max_mode;
  SparseOperator total = SparseOperator::zero(s.basis(), s.basis(), Grade::odd);
  for (int n = 1; n <= N; ++n) {
    SparseOperator raise = dual_raise(n, s.dual);
    SparseOperator lower = dual_lower(n, s.dual);
    SparseOperator g_holo = clifford(n, CliffordType::holo, s.fermion);
    SparseOperator g_anti = clifford(n, CliffordType::antiholo, s.fermion);
    std::vector<const SparseOperator*> t1(3, nullptr), t2(3, nullptr);
    t1[s.dual_factor] = &raise;
    t1[s.fermion_factor] = &g_holo;
    t2[s.dual_factor] = &lower;
    t2[s.fermion_factor] = &g_anti;
    // Each term preserves the dual + fermion energy, so nothing can leave
    // the truncation; strict mode asserts it.
    double c = std::sqrt(static_cast<double>(n));
    total = total + lift(s.space, t1, c, TruncationMode::strict) + lift(s.space, t2, c, TruncationMode::strict);
  }
  return DiracOperator{s, total.with_grade(Grade::odd)};
}

DiracOperator build_dirac_R(const TruncationSpec& spec, SpectatorCut cut) {
  return build_dirac(make_dirac_space(spec, Handedness::right, cut));
}

DiracOperator build_dirac_L(const TruncationSpec& spec, SpectatorCut cut) {
  return build_dirac(make_dirac_space(spec, Handedness::left, cut));
}

SparseOperator weitzenbock_rhs(const DiracSpace& s) {
  SparseOperator number = number_op(s.fermion);
  SparseOperator dual_energy = energy_op(s.dual).scaled(Complex(0.0, -1.0));  // divide by i
  SparseOperator lhs = lift_single(s.space, s.fermion_factor, number, TruncationMode::strict) +
                       lift_single(s.space, s.dual_factor, dual_energy, TruncationMode::strict);
  return lhs.scaled(2.0);
}

double weitzenbock_residual(const TruncationSpec& spec, SpectatorCut cut) {
  DiracOperator d = build_dirac_R(spec, cut);
  SparseOperator diff = d.op * d.op - weitzenbock_rhs(d.space);
  return diff.max_abs();
}

std::vector<Vector> kernel(const SparseOperator& a, double rel_tol) {
  auto blocks = spectral_blocks(a);
  double scale = 0.0;
  for (const auto& b : blocks) scale = std::max(scale, b.values.size() ? b.values.cwiseAbs().maxCoeff() : 0.0);
  double cut = rel_tol * scale;
  std::vector<Vector> out;
  const Basis& basis = *a.domain();
  for (const auto& b : blocks) {
    for (Eigen::Index k = 0; k < b.values.size(); ++k) {
      if (std::abs(b.values(k)) > cut) continue;
      Vector v(a.domain());
      for (std::size_t i = 0; i < b.indices.size(); ++i) {
        Complex c = b.vectors(static_cast<Eigen::Index>(i), k);
        if (c != Complex(0.0)) v.set(b.indices[i], c / std::sqrt(basis.gram(b.indices[i])));
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

namespace {

// Norm ratio ||A e_c|| / ||e_c|| for every column c of A.
std::vector<double> column_ratios(const SparseOperator& a) {
  std::vector<double> out(a.cols(), 0.0);
  const SpMatrix& m = a.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    double s = 0.0;
    for (SpMatrix::InnerIterator it(m, k); it; ++it)
      s += std::norm(it.value()) * a.codomain()->gram(static_cast<std::size_t>(it.row()));
    out[static_cast<std::size_t>(k)] = std::sqrt(s / a.domain()->gram(static_cast<std::size_t>(k)));
  }
  return out;
}

}  // namespace

EstimateReport per_estimate(const TruncationSpec& spec, int n) {
  spec.validate();
  if (n < 1 || n > spec.max_mode) throw std::out_of_range("per_estimate: mode outside the truncation");
  const int E = spec.max_energy;
  // Boson leg in the vacuum; headroom of n in the dual leg so that raising
  // never leaves the space for states inside the scanned window.
  TruncationSpec vac = spec;
  vac.max_energy = 0;
  TruncationSpec wide = spec;
  wide.max_energy = E + n;
  BasisPtr boson = enumerate_basis(vac, FockKind::boson);
  BasisPtr dual = enumerate_basis(wide, FockKind::dual_boson);
  BasisPtr fermion = enumerate_basis(spec, FockKind::fermion);
  TensorSpace space = tensor_space({boson, dual, fermion}, EnergyCap{E + n, {}});

  SparseOperator lower = lift_single(space, 1, dual_lower(n, dual), TruncationMode::strict);
  SparseOperator raise = lift_single(space, 1, dual_raise(n, dual), TruncationMode::compressed);
  std::vector<double> r_lower = column_ratios(lower);
  std::vector<double> r_raise = column_ratios(raise);

  EstimateReport rep;
  rep.mode = n;
  std::map<int, EstimateShell> shells;
  const double slack = 1e-12;
  for (std::size_t c = 0; c < space.basis->size(); ++c) {
    const Label& lab = space.basis->label(c);
    Label d = space.segment(lab, 1);
    Label f = space.segment(lab, 2);
    int e = label_energy(FockKind::dual_boson, d) + label_energy(FockKind::fermion, f);
    if (e > E) continue;
    int lambda_sq = 2 * e;
    double bound = std::sqrt(static_cast<double>(lambda_sq)) / std::sqrt(2.0 * n);
    EstimateShell& sh = shells[lambda_sq];
    sh.lambda_sq = lambda_sq;
    sh.states += 1;
    sh.bound_lower = bound;
    sh.bound_raise = bound + 1.0;
    sh.max_ratio_lower = std::max(sh.max_ratio_lower, r_lower[c]);
    sh.max_ratio_raise = std::max(sh.max_ratio_raise, r_raise[c]);
    rep.max_ratio = std::max(rep.max_ratio, r_lower[c]);
    if (r_lower[c] > bound * (1.0 + slack) + slack) ++rep.violations;
    if (r_raise[c] > (bound + 1.0) * (1.0 + slack)) ++rep.violations;
    // Single-mode dual monomial zbar_n^k with the fermion vacuum.
    bool single = std::all_of(f.begin(), f.end(), [](int x) { return x == 0; });
    for (std::size_t i = 0; i < d.size(); ++i)
      if (static_cast<int>(i) != n - 1 && d[i] != 0) single = false;
    if (single && d[static_cast<std::size_t>(n - 1)] > 0) {
      ++rep.equality_states;
      rep.equality_defect = std::max(rep.equality_defect, std::abs(r_lower[c] - bound));
    }
  }
  for (auto& [k, sh] : shells) rep.shells.push_back(sh);
  return rep;
}

SparseOperator bounded_transform(const SparseOperator& a, double tol) {
  auto blocks = spectral_blocks(a, tol);
  std::vector<SparseOperator::Entry> entries;
  const Basis& basis = *a.domain();
  for (const auto& b : blocks) {
    Eigen::VectorXd f = b.values.unaryExpr([](double x) { return x / std::sqrt(1.0 + x * x); });
    CMatrix m = b.vectors * f.asDiagonal() * b.vectors.adjoint();
    for (std::size_t j = 0; j < b.indices.size(); ++j)
      for (std::size_t i = 0; i < b.indices.size(); ++i) {
        Complex v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v == Complex(0.0)) continue;
        // back from orthonormal coordinates: G^{-1/2} M G^{1/2}
        v *= std::sqrt(basis.gram(b.indices[j]) / basis.gram(b.indices[i]));
        entries.push_back({b.indices[i], b.indices[j], v});
      }
  }
  return SparseOperator::from_entries(a.domain(), a.codomain(), entries, a.grade());
}

std::vector<std::size_t> partition_counts(int max_part, int max_weight, bool distinct) {
  std::vector<std::size_t> p(static_cast<std::size_t>(std::max(0, max_weight)) + 1, 0);
  if (max_weight < 0) return {};
  p[0] = 1;
  for (int part = 1; part <= max_part; ++part) {
    if (distinct) {
      for (int w = max_weight; w >= part; --w) p[static_cast<std::size_t>(w)] += p[static_cast<std::size_t>(w - part)];
    } else {
      for (int w = part; w <= max_weight; ++w) p[static_cast<std::size_t>(w)] += p[static_cast<std::size_t>(w - part)];
    }
  }
  return p;
}

std::map<int, std::size_t> predicted_square_multiplicities(const DiracSpace& s) {
  const int N = s.spec.max_mode, E = s.spec.max_energy;
  auto p = partition_counts(N, E, false);
  auto q = partition_counts(N, E, true);
  std::vector<std::size_t> boson_upto(static_cast<std::size_t>(E) + 1, 0);
  std::size_t acc = 0;
  for (int w = 0; w <= E; ++w) boson_upto[static_cast<std::size_t>(w)] = (acc += p[static_cast<std::size_t>(w)]);
  std::map<int, std::size_t> out;
  for (int e = 0; e <= E; ++e) {
    std::size_t pairs = 0;
    for (int wd = 0; wd <= e; ++wd) pairs += p[static_cast<std::size_t>(wd)] * q[static_cast<std::size_t>(e - wd)];
    std::size_t bosons = s.cut == SpectatorCut::joint ? boson_upto[static_cast<std::size_t>(E - e)]
                                                       : boson_upto[static_cast<std::size_t>(E)];
    if (pairs != 0 && bosons != 0) out[2 * e] = pairs * bosons;
  }
  return out;
}

std::vector<SpectrumRow> square_spectrum_report(const DiracOperator& d) {
  std::vector<double> values = spectrum(d.op * d.op, d.space.spec.tolerance);
  auto measured = multiplicities(values, 1e-8);
  auto predicted = predicted_square_multiplicities(d.space);
  std::vector<SpectrumRow> rows;
  std::map<int, std::size_t> seen;
  for (auto [v, mult] : measured) {
    int key = static_cast<int>(std::lround(v));
    SpectrumRow row;
    row.eigenvalue = v;
    row.multiplicity = mult;
    auto it = predicted.find(key);
    row.predicted = it == predicted.end() ? 0 : it->second;
    row.match = std::abs(v - key) <= 1e-9 * std::max(1.0, std::abs(v)) && row.predicted == mult;
    seen[key] = mult;
    rows.push_back(row);
  }
  for (auto [key, mult] : predicted)
    if (!seen.count(key)) rows.push_back(SpectrumRow{static_cast<double>(key), 0, mult, false});
  return rows;
}

}  // namespace kkindex
