#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "doctest.h"
#include "kkindex/assembly.hpp"

using namespace kkindex;

namespace {

double dense_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(es.eigenvalues().maxCoeff());
}

// The cycle rebuilt factor by factor with the generic tensor lift.
SparseOperator lifted_cycle(const JCycle& c, const TensorSpace& space) {
  const std::size_t M = static_cast<std::size_t>(c.active);
  const DiracSpace& sa = c.left.space;
  SparseOperator total = SparseOperator::zero(space.basis, space.basis, Grade::odd);
  for (int n = 1; n <= c.active; ++n) {
    auto dz = hermite_derivative(Derivative::z, c.hermite);
    auto dzb = hermite_derivative(Derivative::zbar, c.hermite);
    auto ga = clifford(n, CliffordType::antiholo, sa.fermion);
    auto gh = clifford(n, CliffordType::holo, sa.fermion);
    std::vector<const SparseOperator*> t1(M + 3, nullptr), t2(M + 3, nullptr);
    t1[static_cast<std::size_t>(n - 1)] = &dz;
    t1[M] = &ga;
    t2[static_cast<std::size_t>(n - 1)] = &dzb;
    t2[M] = &gh;
    double s = std::sqrt(static_cast<double>(n));
    total = total + lift(space, t1, s) + lift(space, t2, s);
  }
  for (int n = 1; n <= c.spec.max_mode; ++n) {
    auto raise = dual_raise(n, sa.dual);
    auto lower = dual_lower(n, sa.dual);
    auto ga = clifford(n, CliffordType::antiholo, sa.fermion);
    auto gh = clifford(n, CliffordType::holo, sa.fermion);
    std::vector<const SparseOperator*> t1(M + 3, nullptr), t2(M + 3, nullptr);
    t1[M] = &gh;
    t1[M + 1] = &raise;
    t2[M] = &ga;
    t2[M + 1] = &lower;
    double s = std::sqrt(static_cast<double>(n));
    total = total + lift(space, t1, s, TruncationMode::strict) + lift(space, t2, s, TruncationMode::strict);
  }
  return total;
}

CVector random_vector(Eigen::Index n, SeededRng& rng) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex();
  return v;
}

}  // namespace

TEST_CASE("materialized cycle agrees with the generic tensor lift") {
  for (auto cut : {SpectatorCut::independent, SpectatorCut::joint}) {
    JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::pow2(), 3, cut);
    MaterializedJCycle m = materialize(c);
    CHECK(m.space.basis->size() == c.dimension());
    SparseOperator ref = lifted_cycle(c, m.space);
    CHECK((m.op - ref).max_abs() < 1e-13);
    CHECK(self_adjoint_defect(m.op) < 1e-12);
  }
}

TEST_CASE("materialize refuses oversized cycles and bad mode counts") {
  JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::pow2(), 3);
  CHECK_THROWS_AS(materialize(c, 10), std::length_error);
  CHECK_THROWS_AS(build_j_cycle({2, 4}, 3, SigmaSequence::pow2(), 3), std::invalid_argument);
  CHECK_THROWS_AS(build_j_cycle({2, 4}, 0, SigmaSequence::pow2(), 3), std::invalid_argument);
}

TEST_CASE("compression of the explicit matrix matches the per-mode assembly") {
  JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::pow2(), 2);
  MaterializedJCycle m = materialize(c);
  SparseOperator direct = compress_materialized(c, m);
  AssemblyResult a = assemble(c);
  CHECK((direct - a.cycle.op).max_abs() < 1e-12);
  CHECK((a.cycle.op - c.left.op).max_abs() < 1e-12);
}

TEST_CASE("assembled cycle equals the left Dirac operator at (3, 8), three modes") {
  JCycle c = build_j_cycle({3, 8}, 3, SigmaSequence::pow2());
  AssemblyResult a = assemble(c);
  CHECK(a.xi_scalars.size() == 6);
  CHECK(a.max_scalar < 1e-12);
  CHECK((a.cycle.op - c.left.op).max_abs() <= 1e-10);
  CHECK(a.module_dimension == c.left.space.basis()->size());
}

TEST_CASE("xi prefix is a unit tensor product") {
  JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::geometric(1.0, 0.5), 4);
  CVector p = xi_prefix(c);
  CHECK(static_cast<std::size_t>(p.size()) == c.prefix_dimension());
  CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto h = static_cast<Eigen::Index>(c.hermite->size());
  CHECK(std::abs(p(3 * h + 5) - c.xi[0].coeff(3) * c.xi[1].coeff(5)) < 1e-15);
}

TEST_CASE("analytic and KK index cycles are unitarily equivalent") {
  SeededRng rng(7);
  for (TruncationSpec spec : {TruncationSpec{2, 4}, TruncationSpec{3, 6}, TruncationSpec{3, 8}}) {
    auto an = analytic_index(spec), kk = kk_index(spec);
    IndexComparison r = compare_indices(an, kk, rng);
    CHECK(r.same_dimension);
    CHECK(r.intertwining < 1e-12);
    CHECK(r.unitarity < 1e-15);
    CHECK(r.spectrum_difference < 1e-9);
    CHECK(r.bounded_difference < 1e-9);
    CHECK(r.analytic_kernel == r.kk_kernel);
    CHECK(r.vacuum_defect == 0.0);
    CHECK(r.module_checked);
    CHECK(r.action_defect < 1e-12);
    CHECK(r.inner_defect < 1e-12);
    CHECK(r.operator_module_defect < 1e-12);
  }
  auto an = analytic_index({3, 4}, SpectatorCut::joint), kk = kk_index({3, 4}, SpectatorCut::joint);
  IndexComparison r = compare_indices(an, kk, rng);
  CHECK_FALSE(r.module_checked);
  CHECK(r.intertwining < 1e-12);
  CHECK(r.kk_kernel == 11);
}

TEST_CASE("module axioms hold on both index cycles") {
  SeededRng rng(11);
  for (auto side : {0, 1}) {
    IndexCycle c = side ? kk_index({2, 4}) : analytic_index({2, 4});
    ModuleAxioms ax = check_module_axioms(c, rng);
    CHECK(ax.associativity < 1e-12);
    CHECK(ax.compatibility < 1e-12);
    CHECK(ax.hermitian < 1e-12);
    CHECK(ax.min_eigenvalue > -1e-12);
  }
  IndexCycle kk = kk_index({2, 4});
  Vector v = Vector::unit(kk.space.basis(), kk.space.basis()->label(5), 2.0);
  CHECK((module_vector(kk, module_matrix(kk, v)).dense() - v.dense()).norm() < 1e-15);
  CHECK_THROWS(module_vector(kk_index({2, 4}, SpectatorCut::joint), CMatrix::Zero(1, 1)));
}

TEST_CASE("commutator norms match the explicit matrix") {
  JCycle c = build_j_cycle({2, 2}, 2, SigmaSequence::pow2(), 2);
  MaterializedJCycle m = materialize(c);
  SeededRng rng(3);
  const auto P = static_cast<Eigen::Index>(c.prefix_dimension());
  const auto S = static_cast<Eigen::Index>(c.left.space.basis()->size());
  std::vector<RankOneTerm> a{{random_vector(P, rng), random_vector(P, rng)}, {xi_prefix(c), xi_prefix(c)}};
  CommutatorReport r = commutator_bound(a, c);

  CMatrix theta = CMatrix::Zero(P, P);
  for (const auto& t : a) theta += t.phi * t.psi.adjoint();
  CMatrix big = Eigen::kroneckerProduct(theta, CMatrix::Identity(S, S));
  CMatrix d = CMatrix(m.op.orthonormal_matrix());
  double oracle = dense_norm(d * big - big * d);
  CHECK(r.measured == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(r.measured <= r.analytic * (1 + 1e-12));
  CHECK(r.tail > 0.0);

  CommutatorReport zero = commutator_bound({{CVector::Zero(P), CVector::Zero(P)}}, c);
  CHECK(zero.measured < 1e-14);
  CHECK(zero.analytic == 0.0);
  CHECK_THROWS_AS(commutator_bound({{CVector::Zero(3), CVector::Zero(3)}}, c), std::invalid_argument);
}

TEST_CASE("commutator of the Xi projection stays below the analytic bound") {
  JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::pow2(), 6);
  CVector xi = xi_prefix(c);
  CommutatorReport r = commutator_bound({{xi, xi}}, c);
  CHECK(r.measured > 0.0);
  CHECK(r.measured <= r.analytic * (1 + 1e-12));
}

TEST_CASE("resolvent compactness on a small cycle") {
  JCycle c = build_j_cycle({2, 2}, 1, SigmaSequence::pow2(), 3);
  SeededRng rng(5);
  const auto P = static_cast<Eigen::Index>(c.prefix_dimension());
  std::vector<RankOneTerm> a{{xi_prefix(c), xi_prefix(c)}, {random_vector(P, rng), random_vector(P, rng)}};
  const std::size_t S = c.left.space.basis()->size();
  ResolventReport r = resolvent_compactness(a, c, {0, 1, S, 2 * S, 2 * S + 1});
  CHECK(r.dimension == c.dimension());
  CHECK(r.singular_values.size() == 2 * S);
  for (std::size_t i = 1; i < r.singular_values.size(); ++i)
    CHECK(r.singular_values[i] <= r.singular_values[i - 1] + 1e-15);
  CHECK(r.rank_errors[0] == r.singular_values[0]);
  CHECK(r.rank_errors[1] <= r.rank_errors[0]);
  CHECK(r.rank_errors[3] == 0.0);
  CHECK(r.rank_errors[4] == 0.0);
  CHECK(r.decay_violations == 0);
  CHECK(r.split_residual < 1e-12);
  CHECK(r.d1_norm > 0.0);
  CHECK(r.d2_norm > 0.0);
  CHECK(r.d3_norm > 0.0);
}

TEST_CASE("cross terms stay within their bounds") {
  JCycle c = build_j_cycle({2, 4}, 2, SigmaSequence::pow2());
  auto rows = cross_term_bounds(c);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.measured > 0.0);
    CHECK(row.measured <= row.bound);
  }
}

TEST_CASE("Kucerovsky commutators against the explicit matrix") {
  JCycle c = build_j_cycle({2, 2}, 2, SigmaSequence::pow2(), 2);
  MaterializedJCycle m = materialize(c);
  SeededRng rng(9);
  const auto P = static_cast<Eigen::Index>(c.prefix_dimension());
  const auto S = static_cast<Eigen::Index>(c.left.space.basis()->size());
  CVector e = random_vector(P, rng);
  KucerovskyReport r = kucerovsky_check(c, {e, CVector::Zero(P), xi_prefix(c)});
  REQUIRE(r.commutator_norms.size() == 3);
  CMatrix t = Eigen::kroneckerProduct(e, CMatrix::Identity(S, S));
  CMatrix d = CMatrix(m.op.orthonormal_matrix());
  CMatrix dl = CMatrix(c.left.op.orthonormal_matrix());
  CHECK(r.commutator_norms[0] == doctest::Approx(dense_norm(d * t - t * dl)).epsilon(1e-9));
  CHECK(r.commutator_norms[1] == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.commutator_norms[i] <= r.commutator_bounds[i] * (1 + 1e-12));
  CHECK(r.positivity_min == 0.0);
}

TEST_CASE("finite model assembly") {
  auto check = [](const Cocycle& tau, std::size_t rank) {
    FiniteAssemblyReport r = finite_assembly(tau);
    CHECK(r.compression_residual < 1e-12);
    CHECK(r.spectrum_difference < 1e-8);
    CHECK(r.projection_defect < 1e-15);
    CHECK(r.intertwining < 1e-12);
    CHECK(r.analytic_spectrum_difference < 1e-8);
    CHECK(r.clifford_defect < 1e-14);
    CHECK(r.self_adjoint_defect < 1e-14);
    const std::size_t n = tau.group()->order();
    CHECK(r.module_dimension == n * (rank == 1 ? 2 : 2 * ((rank + 1) / 2)));
    CHECK(r.j_dimension == n * r.module_dimension);
  };
  auto z2 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{2});
  auto z3 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{3});
  auto z42 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{4, 2});
  auto z33 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{3, 3});
  check(Cocycle::carry(z2), 1);
  check(Cocycle::carry(z3), 1);
  check(Cocycle::heisenberg(z42), 2);
  check(Cocycle::heisenberg(z33), 2);
  check(Cocycle::trivial(z33), 2);
}

TEST_CASE("finite model pieces") {
  auto z33 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{3, 3});
  FiniteModel m = build_finite_model(Cocycle::heisenberg(z33));
  REQUIRE(m.clifford.size() == 2);
  for (const auto& y : m.y_left) CHECK((y + y.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((m.phi.adjoint() * m.phi - CMatrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-14);
  // twisted translations do not commute
  CMatrix comm = m.y_left[0] * m.y_left[1] - m.y_left[1] * m.y_left[0];
  CHECK(comm.cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("level compression keeps only level zero") {
  auto z33 = std::make_shared<const FiniteAbelianGroup>(std::vector<int>{3, 3});
  auto rows = level_compression(Cocycle::heisenberg(z33));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].compression == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rows[0].crossed_projection == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(rows[k].compression < 1e-15);
    CHECK(rows[k].crossed_projection < 1e-15);
  }
}
