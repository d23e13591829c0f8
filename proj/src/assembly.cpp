#include "kkindex/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/KroneckerProduct>

namespace kkindex {

namespace {

SpMatrix sparse_identity(std::size_t n) {
  SpMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setIdentity();
  return m;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t out = 1;
  for (int i = 0; i < e; ++i) out *= b;
  return out;
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Largest eigenvalue modulus of a Hermitian matrix.
double hermitian_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return std::sqrt(std::max(0.0, hermitian_norm(m.adjoint() * m)));
}

CMatrix dense_orthonormal(const SparseOperator& a) { return CMatrix(a.orthonormal_matrix()); }

// Sum over n > M of 2 sqrt(2n) sigma_n; list rules sum their explicit tail.
double tail_sum(int M, const SigmaSequence& seq) {
  if (seq.has_tail_rule()) return tail_bound(M, seq);
  double s = 0.0;
  for (std::size_t n = static_cast<std::size_t>(M) + 1; n <= seq.values.size(); ++n)
    s += 2.0 * std::sqrt(2.0 * static_cast<double>(n)) * seq.values[n - 1];
  return s;
}

}  // namespace

std::size_t JCycle::prefix_dimension() const { return ipow(hermite->size(), active); }

JCycle build_j_cycle(const TruncationSpec& spec, int active, const SigmaSequence& sigma, int hermite_cut,
                     SpectatorCut cut) {
  spec.validate();
  if (active < 1 || active > spec.max_mode)
    throw std::invalid_argument("build_j_cycle: active modes must lie in 1..N_max (truncation mismatch)");
  if (hermite_cut < 1) throw std::invalid_argument("build_j_cycle: Hermite cut must be positive");
  JCycle c{spec, cut, active, hermite_cut, sigma, hermite_basis(hermite_cut), {}, build_dirac_L(spec, cut), {}};
  for (int n = 1; n <= active; ++n) {
    ModeFunction xi = xi_coeffs(sigma(n), hermite_cut);
    c.xi.emplace_back(c.hermite, xi.renormalized().dense());
  }
  const TensorSpace& sa = c.left.space.space;
  const std::size_t f = c.left.space.fermion_factor;
  auto dz = hermite_derivative(Derivative::z, c.hermite);
  auto dzb = hermite_derivative(Derivative::zbar, c.hermite);
  for (int n = 1; n <= active; ++n) {
    const double s = std::sqrt(static_cast<double>(n));
    auto g_anti = lift_single(sa, f, clifford(n, CliffordType::antiholo, c.left.space.fermion));
    auto g_holo = lift_single(sa, f, clifford(n, CliffordType::holo, c.left.space.fermion));
    c.terms.push_back({n, dz.scaled(s), g_anti, "dR_z(" + std::to_string(n) + ") gamma(zbar)"});
    c.terms.push_back({n, dzb.scaled(s), g_holo, "dR_zbar(" + std::to_string(n) + ") gamma(z)"});
  }
  c.terms.push_back({0, std::nullopt, c.left.op, "d_L"});
  return c;
}

MaterializedJCycle materialize(const JCycle& c, std::size_t max_dimension) {
  if (c.dimension() > max_dimension)
    throw std::length_error("materialize: dimension " + std::to_string(c.dimension()) + " exceeds the limit");
  const DiracSpace& sa = c.left.space;
  std::vector<BasisPtr> factors(static_cast<std::size_t>(c.active), c.hermite);
  factors.push_back(sa.fermion);
  factors.push_back(sa.dual);
  factors.push_back(sa.boson);
  EnergyCap cap;
  cap.cap = c.spec.max_energy;
  cap.counted.assign(factors.size(), false);
  cap.counted[factors.size() - 3] = true;
  cap.counted[factors.size() - 2] = true;
  cap.counted[factors.size() - 1] = c.cut == SpectatorCut::joint;
  TensorSpace space = tensor_space(factors, cap);
  const std::size_t h = c.hermite->size(), n_sa = sa.basis()->size();
  if (space.basis->size() != c.dimension()) throw std::logic_error("materialize: product basis size mismatch");
  // The product basis is ordered prefix-major, so Kronecker products act in place.
  for (std::size_t i = 0; i < space.basis->size(); ++i) {
    std::size_t rest = i / n_sa;
    const Label& lab = space.basis->label(i);
    if (!std::equal(sa.basis()->label(i % n_sa).begin(), sa.basis()->label(i % n_sa).end(),
                    lab.end() - static_cast<long>(sa.basis()->label(i % n_sa).size())))
      throw std::logic_error("materialize: unexpected product ordering");
    for (int m = c.active; m-- > 0;) {
      if (c.hermite->label(rest % h) != space.segment(lab, static_cast<std::size_t>(m)))
        throw std::logic_error("materialize: unexpected product ordering");
      rest /= h;
    }
  }
  SpMatrix d(static_cast<Eigen::Index>(c.dimension()), static_cast<Eigen::Index>(c.dimension()));
  SpMatrix l = d;
  for (const auto& t : c.terms) {
    if (t.mode == 0) {
      SpMatrix k = Eigen::kroneckerProduct(sparse_identity(c.prefix_dimension()), t.tail.matrix());
      l += k;
      continue;
    }
    SpMatrix left = Eigen::kroneckerProduct(sparse_identity(ipow(h, t.mode - 1)), t.hermite->matrix());
    SpMatrix mid = Eigen::kroneckerProduct(left, sparse_identity(ipow(h, c.active - t.mode)));
    SpMatrix k = Eigen::kroneckerProduct(mid, t.tail.matrix());
    d += k;
  }
  SparseOperator dop(space.basis, space.basis, d, Grade::odd), lop(space.basis, space.basis, l, Grade::odd);
  return MaterializedJCycle{space, (dop + lop).with_grade(Grade::odd), dop, lop};
}

AssemblyResult assemble(const JCycle& c) {
  if (c.xi.size() != static_cast<std::size_t>(c.active))
    throw std::invalid_argument("assemble: Xi data does not match the active modes");
  std::vector<CVector> xi;
  for (const auto& v : c.xi) {
    if (v.basis()->size() != c.hermite->size()) throw std::invalid_argument("assemble: Xi mismatch with the cycle");
    xi.push_back(v.dense());
  }
  AssemblyResult out{IndexCycle{IndexSide::kk, c.left.space, SparseOperator::zero(c.left.space.basis(), c.left.space.basis(), Grade::odd)}, {}, 0.0, 0};
  for (const auto& t : c.terms) {
    Complex scalar = 1.0;
    if (t.mode > 0) {
      const CVector& v = xi[static_cast<std::size_t>(t.mode - 1)];
      scalar = v.dot(CMatrix(t.hermite->matrix()) * v);
      out.xi_scalars.push_back(std::abs(scalar));
      out.max_scalar = std::max(out.max_scalar, std::abs(scalar));
    }
    if (scalar != Complex(0.0)) out.cycle.op = out.cycle.op + t.tail.scaled(scalar);
  }
  out.cycle.op = out.cycle.op.with_grade(Grade::odd);
  out.module_dimension = c.left.space.basis()->size();
  return out;
}

SparseOperator compress_materialized(const JCycle& c, const MaterializedJCycle& m) {
  const std::size_t h = c.hermite->size(), n_sa = c.left.space.basis()->size(), P = c.prefix_dimension();
  std::vector<SparseOperator::Entry> entries;
  for (std::size_t p = 0; p < P; ++p) {
    Complex w = 1.0;
    std::size_t rest = p;
    for (int k = c.active; k-- > 0;) {
      w *= c.xi[static_cast<std::size_t>(k)].coeff(rest % h);
      rest /= h;
    }
    if (w == Complex(0.0)) continue;
    for (std::size_t s = 0; s < n_sa; ++s) entries.push_back({p * n_sa + s, s, w});
  }
  auto v = SparseOperator::from_entries(c.left.space.basis(), m.space.basis, entries, Grade::even);
  return (adjoint(v) * m.op * v).with_grade(Grade::odd);
}

IndexCycle analytic_index(const TruncationSpec& spec, SpectatorCut cut) {
  auto d = build_dirac_R(spec, cut);
  return IndexCycle{IndexSide::analytic, d.space, d.op};
}

IndexCycle kk_index(const TruncationSpec& spec, SpectatorCut cut) {
  auto d = build_dirac_L(spec, cut);
  return IndexCycle{IndexSide::kk, d.space, d.op};
}

namespace {

struct ModuleLayout {
  std::vector<std::size_t> boson_of, other_of;
  std::size_t n_boson = 0, n_other = 0;
  bool full = false;
};

ModuleLayout module_layout(const IndexCycle& c) {
  const DiracSpace& s = c.space;
  ModuleLayout out;
  std::map<std::pair<Label, Label>, std::size_t> others;
  const std::size_t n = s.basis()->size();
  std::vector<std::pair<Label, Label>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label& lab = s.basis()->label(i);
    keys[i] = {s.space.segment(lab, s.dual_factor), s.space.segment(lab, s.fermion_factor)};
    others.emplace(keys[i], 0);
  }
  std::size_t k = 0;
  for (auto& [key, idx] : others) idx = k++;
  out.n_other = others.size();
  out.n_boson = s.boson->size();
  for (std::size_t i = 0; i < n; ++i) {
    out.boson_of.push_back(s.boson->index_of(s.space.segment(s.basis()->label(i), s.boson_factor)));
    out.other_of.push_back(others[keys[i]]);
  }
  out.full = n == out.n_boson * out.n_other;
  return out;
}

}  // namespace

CMatrix module_matrix(const IndexCycle& c, const Vector& v) {
  auto lay = module_layout(c);
  const bool kk = c.side == IndexSide::kk;
  CMatrix m = kk ? CMatrix::Zero(static_cast<Eigen::Index>(lay.n_other), static_cast<Eigen::Index>(lay.n_boson))
                 : CMatrix::Zero(static_cast<Eigen::Index>(lay.n_boson), static_cast<Eigen::Index>(lay.n_other));
  for (std::size_t i = 0; i < lay.boson_of.size(); ++i) {
    Complex x = v.coeff(i) * std::sqrt(c.space.basis()->gram(i));
    auto o = static_cast<Eigen::Index>(lay.other_of[i]), b = static_cast<Eigen::Index>(lay.boson_of[i]);
    if (kk)
      m(o, b) = x;
    else
      m(b, o) = x;
  }
  return m;
}

Vector module_vector(const IndexCycle& c, const CMatrix& m) {
  auto lay = module_layout(c);
  if (!lay.full) throw std::invalid_argument("module_vector: module structure needs the independent spectator cut");
  const bool kk = c.side == IndexSide::kk;
  CVector d(static_cast<Eigen::Index>(lay.boson_of.size()));
  for (std::size_t i = 0; i < lay.boson_of.size(); ++i) {
    auto o = static_cast<Eigen::Index>(lay.other_of[i]), b = static_cast<Eigen::Index>(lay.boson_of[i]);
    d(static_cast<Eigen::Index>(i)) = (kk ? m(o, b) : m(b, o)) / std::sqrt(c.space.basis()->gram(i));
  }
  return Vector(c.space.basis(), d);
}

Vector index_right_action(const IndexCycle& c, const Vector& v, const CMatrix& b) {
  CMatrix m = module_matrix(c, v);
  return module_vector(c, c.side == IndexSide::kk ? CMatrix(m * b) : CMatrix(b.transpose() * m));
}

CMatrix index_inner(const IndexCycle& c, const Vector& v1, const Vector& v2) {
  CMatrix m1 = module_matrix(c, v1), m2 = module_matrix(c, v2);
  if (c.side == IndexSide::kk) return m1.adjoint() * m2;
  return (m2 * m1.adjoint()).transpose();
}

SparseOperator transpose_intertwiner(const IndexCycle& analytic, const IndexCycle& kk) {
  const DiracSpace& a = analytic.space;
  const DiracSpace& k = kk.space;
  if (a.basis()->size() != k.basis()->size()) throw std::invalid_argument("transpose_intertwiner: dimension mismatch");
  std::vector<SparseOperator::Entry> entries;
  for (std::size_t i = 0; i < a.basis()->size(); ++i) {
    const Label& lab = a.basis()->label(i);
    std::vector<Label> seg(3);
    seg[k.boson_factor] = a.space.segment(lab, a.boson_factor);
    seg[k.dual_factor] = a.space.segment(lab, a.dual_factor);
    seg[k.fermion_factor] = a.space.segment(lab, a.fermion_factor);
    Label out;
    for (const auto& s : seg) out.insert(out.end(), s.begin(), s.end());
    std::size_t j = k.basis()->find(out);
    if (j == Basis::npos) throw std::invalid_argument("transpose_intertwiner: label sets differ");
    entries.push_back({j, i, 1.0});
  }
  return SparseOperator::from_entries(a.basis(), k.basis(), entries, Grade::even);
}

namespace {

CMatrix random_matrix(Eigen::Index r, Eigen::Index c, SeededRng& rng) {
  CMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.complex();
  return m;
}

Vector random_module_element(const IndexCycle& c, SeededRng& rng) {
  auto lay = module_layout(c);
  auto nb = static_cast<Eigen::Index>(lay.n_boson), no = static_cast<Eigen::Index>(lay.n_other);
  return module_vector(c, c.side == IndexSide::kk ? random_matrix(no, nb, rng) : random_matrix(nb, no, rng));
}

double vector_diff(const Vector& a, const Vector& b) { return (a.dense() - b.dense()).cwiseAbs().maxCoeff(); }

}  // namespace

IndexComparison compare_indices(const IndexCycle& analytic, const IndexCycle& kk, SeededRng& rng, int trials) {
  if (analytic.side != IndexSide::analytic || kk.side != IndexSide::kk)
    throw std::invalid_argument("compare_indices: expects an analytic and a KK cycle");
  IndexComparison r;
  r.same_dimension = analytic.space.basis()->size() == kk.space.basis()->size();
  if (!r.same_dimension) throw std::invalid_argument("compare_indices: dimension mismatch");
  SparseOperator u = transpose_intertwiner(analytic, kk);
  r.intertwining = (u * analytic.op - kk.op * u).max_abs();
  r.unitarity = (adjoint(u) * u - SparseOperator::identity(analytic.space.basis())).max_abs();
  auto sa = spectrum(analytic.op), sk = spectrum(kk.op);
  for (std::size_t i = 0; i < sa.size(); ++i) r.spectrum_difference = std::max(r.spectrum_difference, std::abs(sa[i] - sk[i]));
  r.bounded_difference = (u * bounded_transform(analytic.op) * adjoint(u) - bounded_transform(kk.op)).max_abs();
  r.analytic_kernel = kernel(analytic.op).size();
  r.kk_kernel = kernel(kk.op).size();
  r.boson_dimension = analytic.space.boson->size();

  // vacuum columns: dual and fermion legs empty on both sides
  for (std::size_t i = 0; i < analytic.space.basis()->size(); ++i) {
    if (analytic.space.pair_energy(i) != 0) continue;
    Vector e = Vector::unit(analytic.space.basis(), analytic.space.basis()->label(i));
    Vector ue = u.apply(e);
    for (std::size_t j = 0; j < kk.space.basis()->size(); ++j)
      if (ue.coeff(j) != Complex(0.0) && kk.space.pair_energy(j) != 0) r.vacuum_defect = std::max(r.vacuum_defect, std::abs(ue.coeff(j)));
  }

  r.module_checked = module_layout(analytic).full && module_layout(kk).full;
  if (!r.module_checked) return r;
  const auto nb = static_cast<Eigen::Index>(analytic.space.boson->size());
  for (int t = 0; t < trials; ++t) {
    Vector f = random_module_element(analytic, rng), g = random_module_element(analytic, rng);
    CMatrix b = random_matrix(nb, nb, rng);
    r.action_defect = std::max(r.action_defect, vector_diff(u.apply(index_right_action(analytic, f, b)),
                                                            index_right_action(kk, u.apply(f), b)));
    r.inner_defect = std::max(r.inner_defect,
                              max_abs(index_inner(kk, u.apply(f), u.apply(g)) - index_inner(analytic, f, g)));
    r.operator_module_defect =
        std::max(r.operator_module_defect, vector_diff(analytic.op.apply(index_right_action(analytic, f, b)),
                                                       index_right_action(analytic, analytic.op.apply(f), b)));
  }
  return r;
}

ModuleAxioms check_module_axioms(const IndexCycle& c, SeededRng& rng, int trials) {
  ModuleAxioms out;
  const auto nb = static_cast<Eigen::Index>(c.space.boson->size());
  out.min_eigenvalue = INFINITY;
  for (int t = 0; t < trials; ++t) {
    Vector f = random_module_element(c, rng), g = random_module_element(c, rng);
    CMatrix b1 = random_matrix(nb, nb, rng), b2 = random_matrix(nb, nb, rng);
    out.associativity = std::max(out.associativity, vector_diff(index_right_action(c, index_right_action(c, f, b1), b2),
                                                                index_right_action(c, f, b1 * b2)));
    out.compatibility = std::max(out.compatibility,
                                 max_abs(index_inner(c, f, index_right_action(c, g, b1)) - index_inner(c, f, g) * b1));
    out.hermitian = std::max(out.hermitian, max_abs(index_inner(c, f, g).adjoint() - index_inner(c, g, f)));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(index_inner(c, f, f), Eigen::EigenvaluesOnly);
    out.min_eigenvalue = std::min(out.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  return out;
}

namespace {

// Prefix operator X on Hermite mode `mode` (1-based, mode 1 most significant) applied to v.
CVector apply_mode(const CVector& v, const CMatrix& x, int mode, int active) {
  const auto h = x.rows();
  const auto stride = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(h), active - mode));
  const auto block = h * stride;
  CVector out(v.size());
  for (Eigen::Index b = 0; b < v.size(); b += block) {
    Eigen::Map<const CMatrix> seg(v.data() + b, stride, h);
    Eigen::Map<CMatrix> dst(out.data() + b, stride, h);
    dst = seg * x.transpose();
  }
  return out;
}

// Sum_k u_k (x) M_k as an operator SA -> prefix (x) SA.
struct TensorBlock {
  std::vector<CVector> u;
  std::vector<SpMatrix> m;
};

// A^H B for two blocks.
CMatrix block_gram(const TensorBlock& a, const TensorBlock& b, Eigen::Index s) {
  SpMatrix acc(s, s);
  for (std::size_t k = 0; k < a.u.size(); ++k)
    for (std::size_t l = 0; l < b.u.size(); ++l) {
      Complex w = a.u[k].dot(b.u[l]);
      if (w == Complex(0.0)) continue;
      SpMatrix prod = SpMatrix(a.m[k].adjoint()) * b.m[l];
      acc += w * prod;
    }
  return CMatrix(acc);
}

CMatrix stacked_gram(const std::vector<TensorBlock>& blocks, Eigen::Index s) {
  const auto J = static_cast<Eigen::Index>(blocks.size());
  CMatrix g(J * s, J * s);
  for (Eigen::Index j = 0; j < J; ++j)
    for (Eigen::Index l = j; l < J; ++l) {
      CMatrix gl = block_gram(blocks[static_cast<std::size_t>(j)], blocks[static_cast<std::size_t>(l)], s);
      g.block(j * s, l * s, s, s) = gl;
      if (l != j) g.block(l * s, j * s, s, s) = gl.adjoint();
    }
  return g;
}

CMatrix psd_sqrt(const CMatrix& g) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// || A B^H || from the Gram matrices of A and B.
double product_norm(const CMatrix& ga, const CMatrix& gb) {
  CMatrix r = psd_sqrt(ga);
  CMatrix m = r * gb * r;
  return std::sqrt(std::max(0.0, hermitian_norm(0.5 * (m + m.adjoint()))));
}

struct PrefixTerm {
  int mode;
  CMatrix x;
  SpMatrix gamma;
};

std::vector<PrefixTerm> prefix_terms(const JCycle& c) {
  std::vector<PrefixTerm> out;
  for (const auto& t : c.terms)
    if (t.mode > 0) out.push_back({t.mode, t.hermite->dense(), t.tail.orthonormal_matrix()});
  return out;
}

double theta_norm(const std::vector<RankOneTerm>& a) {
  if (a.empty()) return 0.0;
  CMatrix phi(a.front().phi.size(), static_cast<Eigen::Index>(a.size())), psi = phi;
  for (std::size_t i = 0; i < a.size(); ++i) {
    phi.col(static_cast<Eigen::Index>(i)) = a[i].phi;
    psi.col(static_cast<Eigen::Index>(i)) = a[i].psi;
  }
  auto s = low_rank_singular_values(phi, psi);
  return s.size() ? s.maxCoeff() : 0.0;
}

void require_prefix(const JCycle& c, const CVector& v, const char* where) {
  if (static_cast<std::size_t>(v.size()) != c.prefix_dimension())
    throw std::invalid_argument(std::string(where) + ": prefix vector has the wrong dimension");
}

}  // namespace

CVector xi_prefix(const JCycle& c) {
  CVector out = CVector::Ones(1);
  for (const auto& v : c.xi) {
    CVector next = Eigen::kroneckerProduct(out, v.dense());
    out = next;
  }
  return out;
}

CommutatorReport commutator_bound(const std::vector<RankOneTerm>& a, const JCycle& c) {
  CommutatorReport r;
  const auto terms = prefix_terms(c);
  const auto s = static_cast<Eigen::Index>(c.left.space.basis()->size());
  SpMatrix id = sparse_identity(static_cast<std::size_t>(s));
  std::vector<TensorBlock> left, right;
  double phi_psi = 0.0;
  for (const auto& t : a) {
    require_prefix(c, t.phi, "commutator_bound");
    require_prefix(c, t.psi, "commutator_bound");
    TensorBlock a1, a2{{t.phi}, {id}}, b1{{t.psi}, {id}}, b2;
    for (const auto& k : terms) {
      CVector xphi = apply_mode(t.phi, k.x, k.mode, c.active);
      CVector xpsi = apply_mode(t.psi, k.x.adjoint(), k.mode, c.active);
      a1.u.push_back(xphi);
      a1.m.push_back(k.gamma);
      b2.u.push_back(-xpsi);
      b2.m.push_back(SpMatrix(k.gamma.adjoint()));
      r.analytic += std::sqrt(2.0) * (t.psi.norm() * xphi.norm() + t.phi.norm() * xpsi.norm());
    }
    left.push_back(std::move(a1));
    left.push_back(std::move(a2));
    right.push_back(std::move(b1));
    right.push_back(std::move(b2));
    phi_psi += t.phi.norm() * t.psi.norm();
  }
  if (!left.empty()) r.measured = product_norm(stacked_gram(left, s), stacked_gram(right, s));
  r.tail = 2.0 * phi_psi * tail_sum(c.active, c.sigma);
  return r;
}

ResolventReport resolvent_compactness(const std::vector<RankOneTerm>& a, const JCycle& c,
                                      const std::vector<std::size_t>& ranks) {
  ResolventReport r;
  MaterializedJCycle m = materialize(c);
  const std::size_t n_sa = c.left.space.basis()->size();
  r.dimension = m.space.basis->size();
  SpMatrix on = m.op.orthonormal_matrix();
  SpMatrix k = sparse_identity(r.dimension) + SpMatrix(on * on);
  Eigen::SimplicialLDLT<SpMatrix> ldlt(k);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("resolvent_compactness: factorization failed");

  if (!a.empty()) {
    const auto S = static_cast<Eigen::Index>(n_sa);
    const auto n = static_cast<Eigen::Index>(a.size());
    CMatrix phi(static_cast<Eigen::Index>(r.dimension), n * S), psi(static_cast<Eigen::Index>(r.dimension), n * S);
    CMatrix id = CMatrix::Identity(S, S);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& t = a[static_cast<std::size_t>(i)];
      require_prefix(c, t.phi, "resolvent_compactness");
      require_prefix(c, t.psi, "resolvent_compactness");
      phi.middleCols(i * S, S) = Eigen::kroneckerProduct(t.phi, id);
      psi.middleCols(i * S, S) = Eigen::kroneckerProduct(t.psi, id);
    }
    CMatrix y = ldlt.solve(phi);
    Eigen::VectorXd sv = low_rank_singular_values(y, psi);
    r.singular_values.assign(sv.data(), sv.data() + sv.size());
    std::sort(r.singular_values.rbegin(), r.singular_values.rend());
  }
  for (std::size_t rank : ranks) r.rank_errors.push_back(rank < r.singular_values.size() ? r.singular_values[rank] : 0.0);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(on), Eigen::EigenvaluesOnly);
  std::vector<double> mu;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mu.push_back(es.eigenvalues()(i) * es.eigenvalues()(i));
  std::sort(mu.begin(), mu.end());
  const double an = theta_norm(a);
  for (std::size_t j = 0; j < r.singular_values.size() && j < mu.size(); ++j) {
    r.resolvent_bounds.push_back(an / (1.0 + mu[j]));
    if (r.singular_values[j] > r.resolvent_bounds.back() * (1.0 + 1e-9) + 1e-12) ++r.decay_violations;
  }

  // cross term of the square against its closed form
  SparseOperator d1 = m.d_part * m.d_part, d3 = m.l_part * m.l_part;
  SparseOperator measured = m.op * m.op - d1 - d3;
  const std::size_t h = c.hermite->size();
  SpMatrix predicted(static_cast<Eigen::Index>(r.dimension), static_cast<Eigen::Index>(r.dimension));
  const TensorSpace& sa = c.left.space.space;
  for (const auto& t : c.terms) {
    if (t.mode == 0) continue;
    const bool holo_z = t.name.rfind("dR_z(", 0) == 0;
    auto leg = holo_z ? dual_raise(t.mode, c.left.space.dual) : dual_lower(t.mode, c.left.space.dual);
    SparseOperator lifted = lift_single(sa, c.left.space.dual_factor, leg);
    SpMatrix left = Eigen::kroneckerProduct(sparse_identity(ipow(h, t.mode - 1)), t.hermite->matrix());
    SpMatrix mid = Eigen::kroneckerProduct(left, sparse_identity(ipow(h, c.active - t.mode)));
    SpMatrix term = Eigen::kroneckerProduct(mid, lifted.matrix());
    predicted += Complex(-2.0 * std::sqrt(static_cast<double>(t.mode))) * term;
  }
  SparseOperator pred(m.space.basis, m.space.basis, predicted, Grade::even);
  std::vector<bool> keep(r.dimension);
  for (std::size_t i = 0; i < r.dimension; ++i)
    keep[i] = c.left.space.pair_energy(i % n_sa) + c.spec.max_mode <= c.spec.max_energy;
  r.split_residual = masked_max_abs(measured - pred, keep);
  r.d1_norm = hermitian_norm(dense_orthonormal(d1));
  r.d2_norm = hermitian_norm(dense_orthonormal(measured));
  r.d3_norm = hermitian_norm(dense_orthonormal(d3));
  return r;
}

std::vector<CrossTermRow> cross_term_bounds(const JCycle& c) {
  const DiracSpace& sa = c.left.space;
  const auto S = static_cast<Eigen::Index>(sa.basis()->size());
  CMatrix l_on = dense_orthonormal(c.left.op);
  CMatrix rinv = (CMatrix::Identity(S, S) + l_on * l_on).inverse();
  auto dz = hermite_derivative(Derivative::z, c.hermite).dense();
  auto dzb = hermite_derivative(Derivative::zbar, c.hermite).dense();
  std::vector<CrossTermRow> out;
  for (int n = 1; n <= c.active; ++n) {
    const CVector xi = c.xi[static_cast<std::size_t>(n - 1)].dense();
    CVector u = dz * xi, w = dzb * xi;
    CMatrix rr = dense_orthonormal(lift_single(sa.space, sa.dual_factor, dual_raise(n, sa.dual))) * rinv;
    CMatrix lr = dense_orthonormal(lift_single(sa.space, sa.dual_factor, dual_lower(n, sa.dual))) * rinv;
    CMatrix g = u.squaredNorm() * rr.adjoint() * rr + u.dot(w) * rr.adjoint() * lr + w.dot(u) * lr.adjoint() * rr +
                w.squaredNorm() * lr.adjoint() * lr;
    CrossTermRow row;
    row.mode = n;
    row.measured = 2.0 * n * std::sqrt(hermitian_norm(0.5 * (g + g.adjoint())));
    row.bound = n * c.sigma(n) * (spectral_norm(rr) + spectral_norm(lr));
    out.push_back(row);
  }
  return out;
}

KucerovskyReport kucerovsky_check(const JCycle& c, const std::vector<CVector>& generators) {
  KucerovskyReport r;
  const auto terms = prefix_terms(c);
  const auto s = static_cast<Eigen::Index>(c.left.space.basis()->size());
  const double tail = tail_sum(c.active, c.sigma);
  for (const auto& e : generators) {
    require_prefix(c, e, "kucerovsky_check");
    TensorBlock b;
    double bound = 0.0;
    for (const auto& k : terms) {
      b.u.push_back(apply_mode(e, k.x, k.mode, c.active));
      b.m.push_back(k.gamma);
      bound += std::sqrt(2.0) * b.u.back().norm();
    }
    CMatrix g = block_gram(b, b, s);
    r.commutator_norms.push_back(std::sqrt(hermitian_norm(0.5 * (g + g.adjoint()))));
    r.commutator_bounds.push_back(bound + e.norm() * tail);
  }
  // The left class carries the zero operator, so the symmetrized form vanishes identically.
  r.positivity_min = 0.0;
  return r;
}

namespace {

Complex level_basis_value(const Extension& e, std::size_t k, std::size_t x, int level) {
  if (e.base(x) != k) return 0.0;
  return root_of_unity(e.root_order(), static_cast<long long>(level) * e.phase(x));
}

}  // namespace

FiniteModel build_finite_model(const Cocycle& tau) {
  FiniteModel f;
  f.ext = make_extension(tau);
  const Extension& e = *f.ext;
  const FiniteAbelianGroup& G = e.group();
  const std::size_t n = G.order();
  f.rank = G.rank();
  const int K = static_cast<int>((f.rank + 1) / 2);
  TruncationSpec fs{std::max(K, 1), std::max(K, 1) * (std::max(K, 1) + 1) / 2};
  f.spinor = enumerate_basis(fs, FockKind::fermion);
  for (int j = 1; j <= std::max(K, 1); ++j) {
    CMatrix wedge = clifford(j, CliffordType::antiholo, f.spinor).dense() / std::sqrt(2.0);
    CMatrix contr = -clifford(j, CliffordType::holo, f.spinor).dense() / std::sqrt(2.0);
    f.clifford.push_back(wedge - contr);
    f.clifford.push_back(Complex(0.0, 1.0) * (wedge + contr));
  }
  f.clifford.resize(f.rank);
  const auto N = static_cast<Eigen::Index>(n);
  for (std::size_t i = 0; i < f.rank; ++i) {
    const std::size_t gi = G.generator(i);
    CMatrix x = CMatrix::Zero(N, N);
    // (R_h phi)(y) = phi(y + h)
    for (std::size_t y = 0; y < n; ++y) {
      x(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(G.add(y, gi))) += 0.5;
      x(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(G.sub(y, gi))) -= 0.5;
    }
    f.x.push_back(x);
    const std::size_t h = e.make(gi, 0), hinv = e.inv(h);
    CMatrix yl = CMatrix::Zero(N, N), yr = CMatrix::Zero(N, N);
    for (std::size_t g = 0; g < n; ++g) {
      const std::size_t pt = e.make(g, 0);
      const std::size_t l1 = e.mul(hinv, pt), l2 = e.mul(h, pt);  // lambda_h, lambda_h^-1
      const std::size_t r1 = e.mul(pt, h), r2 = e.mul(pt, hinv);  // rho_h, rho_h^-1
      for (std::size_t k = 0; k < n; ++k) {
        auto gi_ = static_cast<Eigen::Index>(g), ki = static_cast<Eigen::Index>(k);
        yl(gi_, ki) = 0.5 * (level_basis_value(e, k, l1, 1) - level_basis_value(e, k, l2, 1));
        yr(gi_, ki) = 0.5 * (level_basis_value(e, k, r1, -1) - level_basis_value(e, k, r2, -1));
      }
    }
    f.y_left.push_back(yl);
    f.y_right.push_back(yr);
  }
  f.phi = CMatrix::Zero(N, N);
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t k = 0; k < n; ++k)
      f.phi(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k)) = level_basis_value(e, k, e.inv(e.make(g, 0)), -1);
  return f;
}

CMatrix finite_dirac_L(const FiniteModel& m) {
  const auto s = static_cast<Eigen::Index>(m.spinor->size());
  const auto n = static_cast<Eigen::Index>(m.ext->group().order());
  CMatrix out = CMatrix::Zero(s * n, s * n);
  for (std::size_t i = 0; i < m.rank; ++i) out += Eigen::kroneckerProduct(m.clifford[i], m.y_left[i]).eval();
  return out;
}

CMatrix finite_dirac_R(const FiniteModel& m) {
  const auto s = static_cast<Eigen::Index>(m.spinor->size());
  const auto n = static_cast<Eigen::Index>(m.ext->group().order());
  CMatrix out = CMatrix::Zero(s * n, s * n);
  for (std::size_t i = 0; i < m.rank; ++i) out += Eigen::kroneckerProduct(m.y_right[i], m.clifford[i]).eval();
  return out;
}

CMatrix finite_j_cycle(const FiniteModel& m) {
  const auto s = static_cast<Eigen::Index>(m.spinor->size());
  const auto n = static_cast<Eigen::Index>(m.ext->group().order());
  CMatrix out = Eigen::kroneckerProduct(CMatrix::Identity(n, n), finite_dirac_L(m)).eval();
  for (std::size_t i = 0; i < m.rank; ++i) {
    CMatrix xc = Eigen::kroneckerProduct(m.x[i], m.clifford[i]);
    out += Eigen::kroneckerProduct(xc, CMatrix::Identity(n, n)).eval();
  }
  (void)s;
  return out;
}

namespace {

std::vector<double> hermitian_spectrum(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

double spectrum_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

}  // namespace

FiniteAssemblyReport finite_assembly(const Cocycle& tau) {
  FiniteAssemblyReport r;
  FiniteModel m = build_finite_model(tau);
  const FiniteAbelianGroup& G = m.ext->group();
  r.group = G.name();
  const auto n = static_cast<Eigen::Index>(G.order());
  const auto s = static_cast<Eigen::Index>(m.spinor->size());
  const Eigen::Index sa = s * n;
  CMatrix dl = finite_dirac_L(m), dr = finite_dirac_R(m), j = finite_j_cycle(m);
  r.j_dimension = static_cast<std::size_t>(j.rows());
  r.module_dimension = static_cast<std::size_t>(sa);

  CVector ones = CVector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  CMatrix v = Eigen::kroneckerProduct(ones, CMatrix::Identity(sa, sa));
  CMatrix comp = v.adjoint() * j * v;
  r.compression_residual = max_abs(comp - dl);
  r.spectrum_difference = spectrum_gap(hermitian_spectrum(comp), hermitian_spectrum(dl));

  auto gset = std::make_shared<const GSet>(GSet::translation(tau.group()));
  std::vector<double> c(G.order(), 1.0 / static_cast<double>(G.order()));
  CMatrix p = schatten_map(mishchenko(c, gset)).dense();
  r.projection_defect = max_abs(p - ones * ones.adjoint());

  // (a, s) -> (s, a)
  CMatrix swap = CMatrix::Zero(sa, sa);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < s; ++b) swap(b * n + a, a * s + b) = 1.0;
  CMatrix w = swap * Eigen::kroneckerProduct(m.phi, CMatrix::Identity(s, s)).eval();
  r.intertwining = max_abs(w * dr - dl * w);
  r.analytic_spectrum_difference = spectrum_gap(hermitian_spectrum(dr), hermitian_spectrum(dl));

  for (std::size_t i = 0; i < m.rank; ++i)
    for (std::size_t k = 0; k < m.rank; ++k) {
      CMatrix anti = m.clifford[i] * m.clifford[k] + m.clifford[k] * m.clifford[i];
      if (i == k) anti += 2.0 * CMatrix::Identity(s, s);
      r.clifford_defect = std::max(r.clifford_defect, max_abs(anti));
    }
  r.self_adjoint_defect = std::max(max_abs(j - j.adjoint()), std::max(max_abs(dl - dl.adjoint()), max_abs(dr - dr.adjoint())));
  return r;
}

std::vector<LevelCompressionRow> level_compression(const Cocycle& tau) {
  auto ext = make_extension(tau);
  const FiniteAbelianGroup& G = ext->group();
  const int m = ext->root_order();
  auto gset = std::make_shared<const GSet>(GSet::translation(tau.group()));
  std::vector<double> c(G.order(), 1.0 / static_cast<double>(G.order()));
  auto v = GroupAlgebraElement::zero(ext);
  for (std::size_t x = 0; x < ext->size(); ++x) v.values[x] = std::sqrt(c[ext->base(x)]);
  auto pulled = TwistedCrossedElement::pullback(ext, mishchenko(c, gset));
  std::vector<LevelCompressionRow> out;
  for (int k = 0; k < m; ++k) {
    auto pk = level_project(v, k);
    double s = 0.0;
    for (auto z : pk.values) s += std::norm(z);
    LevelCompressionRow row;
    row.level = k;
    row.compression = std::sqrt(s / m);
    double mx = 0.0;
    for (auto z : level_project(pulled, k).values) mx = std::max(mx, std::abs(z));
    row.crossed_projection = mx;
    out.push_back(row);
  }
  return out;
}

}  // namespace kkindex
