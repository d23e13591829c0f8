#include <cmath>
#include <set>

#include "doctest.h"
#include "kkindex/fock.hpp"

using namespace kkindex;

namespace {

// Brute-force count of multisets from {1..N} with weight <= E (oracle for
// enumerate_basis, independent of its recursion).
std::size_t brute_boson_count(int N, int E) {
  std::size_t count = 0;
  std::vector<int> k(static_cast<std::size_t>(N), 0);
  while (true) {
    int w = 0;
    for (int i = 0; i < N; ++i) w += (i + 1) * k[static_cast<std::size_t>(i)];
    if (w <= E) ++count;
    int i = 0;
    while (i < N) {
      if (++k[static_cast<std::size_t>(i)] <= E) break;
      k[static_cast<std::size_t>(i)] = 0;
      ++i;
    }
    if (i == N) break;
  }
  return count;
}

double masked_commutator_defect(const SparseOperator& c, const SparseOperator& expect, const std::vector<bool>& keep) {
  return masked_max_abs(c - expect, keep);
}

}  // namespace

TEST_CASE("basis enumeration counts") {
  CHECK(enumerate_basis({3, 4}, FockKind::boson)->size() == 11);
  CHECK(enumerate_basis({3, 4}, FockKind::dual_boson)->size() == 11);
  for (auto kind : {FockKind::boson, FockKind::dual_boson, FockKind::fermion})
    CHECK(enumerate_basis({3, 0}, kind)->size() == 1);

  auto f = enumerate_basis({3, 4}, FockKind::fermion);
  std::set<std::vector<int>> got;
  for (const auto& l : f->labels()) got.insert(SpinorState::decode(l).indices);
  std::set<std::vector<int>> expect{{}, {1}, {2}, {3}, {1, 2}, {1, 3}};
  CHECK(got == expect);

  for (int N = 1; N <= 4; ++N)
    for (int E = 0; E <= 9; ++E) CHECK(enumerate_basis({N, E}, FockKind::boson)->size() == brute_boson_count(N, E));
}

TEST_CASE("Gram weights and ordering") {
  auto b = enumerate_basis({3, 6}, FockKind::boson);
  for (std::size_t i = 0; i < b->size(); ++i) {
    double g = 1.0;
    for (int k : b->label(i)) g *= std::tgamma(k + 1.0);
    CHECK(b->gram(i) == g);
    if (i) CHECK(b->label(i - 1) < b->label(i));
  }
  auto f = enumerate_basis({4, 10}, FockKind::fermion);
  for (double g : f->gram()) CHECK(g == 1.0);
}

TEST_CASE("state encodings round-trip") {
  OccupationState s{{{1, 2}, {3, 1}}};
  CHECK(s.energy() == 5);
  CHECK(s.encode(3) == Label{2, 0, 1});
  CHECK(OccupationState::decode(s.encode(4)).occupations == s.occupations);
  SpinorState t{{1, 4}};
  CHECK(t.energy() == 5);
  CHECK(t.encode(4) == Label{1, 0, 0, 1});
  CHECK_THROWS(SpinorState{{2, 2}}.encode(4));
}

TEST_CASE("boson ladder matrix elements") {
  auto b = enumerate_basis({3, 6}, FockKind::boson);
  Vector z1sq = Vector::unit(b, {2, 0, 0});
  Vector out = boson_lower(1, b).apply(z1sq);
  CHECK((out - Vector::unit(b, {1, 0, 0}, -2.0)).norm() == 0.0);
  Vector vac = Vector::unit(b, {0, 0, 0});
  CHECK((boson_raise(2, b).apply(vac) - Vector::unit(b, {0, 1, 0})).norm() == 0.0);
  auto b8 = enumerate_basis({3, 8}, FockKind::boson);
  Vector z2cube = Vector::unit(b8, {0, 3, 0});
  auto c = graded_commutator(boson_raise(2, b8), boson_lower(2, b8));
  // (-3) - (-4) = 1 on z_2^3
  CHECK((c.apply(z2cube) - z2cube).norm() == 0.0);
}

TEST_CASE("strict mode rejects raising out of the truncation") {
  auto b = enumerate_basis({2, 3}, FockKind::boson);
  CHECK_THROWS_AS(boson_raise(1, b, TruncationMode::strict), TruncationOverflow);
  auto safe = energy_subbasis(b, 2);
  CHECK_NOTHROW(boson_raise(1, safe, b, TruncationMode::strict));
  auto compressed = boson_raise(1, b, TruncationMode::compressed);
  CHECK(compressed.nonzeros() < b->size());
}

TEST_CASE("CCR on energy-safe subspaces") {
  for (int N = 1; N <= 4; ++N)
    for (int E : {4, 7, 10}) {
      auto b = enumerate_basis({N, E}, FockKind::boson);
      auto id = SparseOperator::identity(b);
      auto zero = SparseOperator::zero(b, b);
      for (int n = 1; n <= N; ++n)
        for (int m = 1; m <= N; ++m) {
          auto keep = energy_mask(*b, E - std::max(n, m));
          auto c = graded_commutator(boson_raise(n, b), boson_lower(m, b));
          CHECK(masked_commutator_defect(c, n == m ? id : zero, keep) <= 1e-12);
          CHECK(masked_max_abs(graded_commutator(boson_raise(n, b), boson_raise(m, b)), keep) <= 1e-12);
          CHECK(masked_max_abs(graded_commutator(boson_lower(n, b), boson_lower(m, b)), keep) <= 1e-12);
        }
    }
}

TEST_CASE("dual ladders: norm identity, vacuum and commutator sign") {
  auto d = enumerate_basis({3, 6}, FockKind::dual_boson);
  Vector zb1sq = Vector::unit(d, {2, 0, 0});
  CHECK(dual_lower(1, d).apply(zb1sq).norm() == doctest::Approx(std::sqrt(2.0) * zb1sq.norm()).epsilon(1e-14));
  Vector vac = Vector::unit(d, {0, 0, 0});
  CHECK(dual_lower(3, d).apply(vac).norm() == 0.0);
  auto d1 = enumerate_basis({1, 6}, FockKind::dual_boson);
  auto c = graded_commutator(dual_lower(1, d1), dual_raise(1, d1));
  auto keep = energy_mask(*d1, 5);
  CHECK(masked_max_abs(c + SparseOperator::identity(d1), keep) == 0.0);
  for (std::size_t i = 0; i < d->size(); ++i)
    for (int n = 1; n <= 3; ++n) {
      Vector v = Vector::unit(d, d->label(i));
      double k = d->label(i)[static_cast<std::size_t>(n - 1)];
      CHECK(dual_lower(n, d).apply(v).norm() == doctest::Approx(std::sqrt(k) * v.norm()).epsilon(1e-14));
    }
}

TEST_CASE("energy operator and its ladder form") {
  auto b = enumerate_basis({3, 6}, FockKind::boson);
  Vector z1z3 = Vector::unit(b, {1, 0, 1});
  CHECK((energy_op(b).apply(z1z3) - z1z3 * Complex(0, 4)).norm() == 0.0);
  Vector vac = Vector::unit(b, {0, 0, 0});
  CHECK(energy_op(b).apply(vac).norm() == 0.0);

  for (int N = 1; N <= 4; ++N)
    for (int E : {6, 10}) {
      auto bb = enumerate_basis({N, E}, FockKind::boson);
      SparseOperator sum = SparseOperator::zero(bb, bb);
      for (int n = 1; n <= N; ++n) sum = sum + (boson_raise(n, bb) * boson_lower(n, bb)).scaled(Complex(0, -n));
      // raise * lower never leaves the truncation, so this holds on every state
      CHECK((energy_op(bb) - sum).max_abs() <= 1e-12);
    }

  auto s = spectrum(energy_op(b).scaled(Complex(0, -1)));
  CHECK(s.front() == 0.0);
  CHECK(s[1] > 0.5);
}

TEST_CASE("Clifford generators") {
  auto f = enumerate_basis({5, 15}, FockKind::fermion);
  Vector vac = Vector::unit(f, {0, 0, 0, 0, 0});
  CHECK((clifford(2, CliffordType::antiholo, f).apply(vac) - Vector::unit(f, {0, 1, 0, 0, 0}, std::sqrt(2.0))).norm() == 0.0);
  Vector z25 = Vector::unit(f, {0, 1, 0, 0, 1});
  CHECK((clifford(2, CliffordType::holo, f).apply(z25) - Vector::unit(f, {0, 0, 0, 0, 1}, -std::sqrt(2.0))).norm() ==
        0.0);
  auto g1 = clifford(1, CliffordType::holo, f);
  CHECK((g1 * g1).max_abs() == 0.0);
  // sign rule: zbar_1 wedge zbar_3 contracted at 3 picks up (-1)^1
  Vector z13 = Vector::unit(f, {1, 0, 1, 0, 0});
  CHECK((clifford(3, CliffordType::holo, f).apply(z13) - Vector::unit(f, {1, 0, 0, 0, 0}, std::sqrt(2.0))).norm() == 0.0);
}

TEST_CASE("CAR on the full fermion space when it is closed under wedging") {
  for (int N = 1; N <= 4; ++N) {
    int E = N * (N + 1) / 2;  // every subset fits
    auto f = enumerate_basis({N, E}, FockKind::fermion);
    auto id = SparseOperator::identity(f);
    for (int n = 1; n <= N; ++n)
      for (int m = 1; m <= N; ++m) {
        auto gn = clifford(n, CliffordType::holo, f);
        auto gbm = clifford(m, CliffordType::antiholo, f);
        auto gm = clifford(m, CliffordType::holo, f);
        auto gbn = clifford(n, CliffordType::antiholo, f);
        auto expect = n == m ? id.scaled(-2.0) : SparseOperator::zero(f, f);
        CHECK((graded_commutator(gn, gbm) - expect).max_abs() <= 1e-12);
        CHECK(graded_commutator(gn, gm).max_abs() <= 1e-12);
        CHECK(graded_commutator(gbn, gbm).max_abs() <= 1e-12);
      }
  }
}

TEST_CASE("CAR on energy-safe subspaces of smaller truncations") {
  for (int N = 2; N <= 4; ++N)
    for (int E = 2; E <= 10; ++E) {
      auto f = enumerate_basis({N, E}, FockKind::fermion);
      auto id = SparseOperator::identity(f);
      for (int n = 1; n <= N; ++n)
        for (int m = 1; m <= N; ++m) {
          auto keep = energy_mask(*f, E - std::max(n, m));
          auto c = graded_commutator(clifford(n, CliffordType::holo, f), clifford(m, CliffordType::antiholo, f));
          CHECK(masked_max_abs(c - (n == m ? id.scaled(-2.0) : SparseOperator::zero(f, f)), keep) <= 1e-12);
        }
    }
}

TEST_CASE("number operator and its Clifford form") {
  auto f = enumerate_basis({4, 8}, FockKind::fermion);
  Vector z14 = Vector::unit(f, {1, 0, 0, 1});
  CHECK((number_op(f).apply(z14) - z14 * 5.0).norm() == 0.0);
  Vector vac = Vector::unit(f, {0, 0, 0, 0});
  CHECK(number_op(f).apply(vac).norm() == 0.0);
  for (int N = 1; N <= 4; ++N)
    for (int E : {0, 3, 6, 8, 10}) {
      auto ff = enumerate_basis({N, E}, FockKind::fermion);
      SparseOperator sum = number_op(ff);
      for (int n = 1; n <= N; ++n)
        sum = sum + (clifford(n, CliffordType::antiholo, ff) * clifford(n, CliffordType::holo, ff)).scaled(0.5 * n);
      CHECK(sum.max_abs() <= 1e-12);
    }
}

TEST_CASE("adjoint of raising equals minus lowering on safe subspace") {
  for (int N = 1; N <= 3; ++N) {
    auto b = enumerate_basis({N, 7}, FockKind::boson);
    for (int n = 1; n <= N; ++n) {
      auto keep = energy_mask(*b, 7 - n);
      CHECK(masked_max_abs(adjoint(boson_raise(n, b)) + boson_lower(n, b), keep) <= 1e-12);
    }
  }
}

TEST_CASE("kind checks") {
  auto b = enumerate_basis({2, 3}, FockKind::boson);
  auto f = enumerate_basis({2, 3}, FockKind::fermion);
  CHECK_THROWS_AS(dual_raise(1, b), BasisMismatch);
  CHECK_THROWS_AS(clifford(1, CliffordType::holo, b), BasisMismatch);
  CHECK_THROWS_AS(number_op(b), BasisMismatch);
  CHECK_THROWS_AS(energy_op(f), BasisMismatch);
  CHECK_THROWS_AS(boson_raise(3, b), std::out_of_range);
  CHECK_THROWS(TruncationSpec{0, 3}.validate());
  CHECK_THROWS(TruncationSpec{2, -1}.validate());
}
