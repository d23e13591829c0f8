#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "doctest.h"
#include "kkindex/limitspace.hpp"
#include "kkindex/rng.hpp"

using namespace kkindex;

namespace {

constexpr double pi = std::numbers::pi;

// Overlap of the disk indicator with psi_a(x) psi_b(y) in polar coordinates:
// 30-point Gauss-Legendre in r, trapezoid in the angle (exact for the
// trigonometric polynomial of degree a + b).
double polar_overlap(double sigma, int a, int b) {
  const int T = 2 * (a + b) + 8;
  auto radial = [&](double r) {
    double s = 0.0;
    for (int k = 0; k < T; ++k) {
      double th = 2.0 * pi * k / T;
      s += hermite_functions(a, r * std::cos(th))[static_cast<std::size_t>(a)] *
           hermite_functions(b, r * std::sin(th))[static_cast<std::size_t>(b)];
    }
    return s * (2.0 * pi / T) * r;
  };
  double v = boost::math::quadrature::gauss<double, 30>::integrate(radial, 0.0, sigma);
  return v / std::sqrt(pi * sigma * sigma);
}

Vector product_vector(const TensorSpace& space, const std::vector<Vector>& legs, const Label& tail) {
  Vector out(space.basis);
  for (std::size_t i = 0; i < space.basis->size(); ++i) {
    const Label& l = space.basis->label(i);
    if (legs.size() < space.factor_count() && space.segment(l, legs.size()) != tail) continue;
    Complex c = 1.0;
    for (std::size_t f = 0; f < legs.size() && c != Complex(0.0); ++f) {
      std::size_t j = legs[f].basis()->find(space.segment(l, f));
      c *= legs[f].coeff(j);
    }
    if (c != Complex(0.0)) out.set(i, c);
  }
  return out;
}

}  // namespace

TEST_CASE("Hermite functions are orthonormal") {
  // Gauss-Hermite free check by a wide Gauss-Kronrod integral.
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b <= 6; ++b) {
      auto f = [&](double x) {
        auto p = hermite_functions(6, x);
        return p[static_cast<std::size_t>(a)] * p[static_cast<std::size_t>(b)];
      };
      double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 15, 1e-14);
      CHECK(v == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("disk indicator is a unit vector") {
  for (double sigma : {1.0, 0.5, 0.125}) {
    auto f = [sigma](double r) { return 1.0 / (pi * sigma * sigma) * 2.0 * pi * r; };
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, sigma, 10, 1e-14);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("disk overlaps agree with a polar quadrature oracle") {
  for (double sigma : {1.0, 0.5, 0.125})
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 0}, {2, 0}, {0, 2}, {2, 2}, {4, 2}, {6, 4}, {10, 8}})
      CHECK(std::abs(disk_overlap(sigma, a, b) - polar_overlap(sigma, a, b)) <= 1e-13);
  CHECK(disk_overlap(1.0, 1, 2) == 0.0);
  CHECK(std::abs(polar_overlap(1.0, 1, 2)) <= 1e-14);
}

TEST_CASE("Xi coefficients: only even-even degrees, Fourier phases, bounded norm") {
  auto xi = xi_coeffs(0.5, 12);
  const Basis& b = *xi.coeffs.basis();
  for (std::size_t i = 0; i < b.size(); ++i) {
    int x = b.label(i)[0], y = b.label(i)[1];
    Complex c = xi.coeffs.coeff(i);
    if ((x | y) & 1) {
      CHECK(c == Complex(0.0));
      continue;
    }
    double sign = ((x + y) / 2) % 2 ? -1.0 : 1.0;
    CHECK(std::abs(c - sign * polar_overlap(0.5, x, y)) <= 1e-13);
  }
  CHECK(xi.norm_sq <= 1.0);
  CHECK(xi.deficiency == doctest::Approx(1.0 - xi.norm_sq));
  CHECK(xi.renormalized().norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Xi norms increase monotonically toward one") {
  double prev = 0.0;
  std::vector<double> deficiency;
  for (int cut : {2, 4, 8, 16, 32, 64, 128}) {
    auto xi = xi_coeffs(0.5, cut);
    CHECK(xi.norm_sq > prev);
    CHECK(xi.norm_sq < 1.0);
    prev = xi.norm_sq;
    deficiency.push_back(xi.deficiency);
  }
  for (std::size_t i = 1; i < deficiency.size(); ++i) CHECK(deficiency[i] < deficiency[i - 1]);
  CHECK(prev > 0.9);
}

TEST_CASE("rotation invariance: Xi is annihilated by the angular momentum") {
  // L = x p_y - y p_x = i (a_x^dag a_y - a_y^dag a_x) in ladder form.
  auto xi = xi_coeffs(1.0, 16);
  const auto& b = xi.coeffs.basis();
  Vector out(b);
  for (std::size_t j = 0; j < b->size(); ++j) {
    int x = b->label(j)[0], y = b->label(j)[1];
    Complex c = xi.coeffs.coeff(j);
    if (c == Complex(0.0)) continue;
    if (y > 0) {
      std::size_t i = b->index_of({x + 1, y - 1});
      out.set(i, out.coeff(i) + c * std::sqrt((x + 1.0) * y));
    }
    if (x > 0) {
      std::size_t i = b->index_of({x - 1, y + 1});
      out.set(i, out.coeff(i) - c * std::sqrt(x * (y + 1.0)));
    }
  }
  CHECK(out.norm() <= 1e-12);
}

TEST_CASE("derivative norms on Xi") {
  CHECK(momentum_integral() == doctest::Approx(0.25).epsilon(1e-10));
  struct Case {
    double sigma, expect;
  };
  for (auto c : {Case{1.0, 0.5}, Case{0.5, 0.25}, Case{0.125, 0.0625}}) {
    auto r = dRz_norm_on_xi(c.sigma, 24);
    CHECK(std::abs(r.position - c.expect) <= 1e-12);
    CHECK(std::abs(r.momentum - c.expect) <= 1e-9);
    CHECK(r.closed_form == c.expect);
    CHECK(r.hermite <= c.expect);
    CHECK(r.hermite <= c.sigma);
    CHECK(r.hermite > 0.0);
  }
  // the Hermite value increases with the cut
  double prev = 0.0;
  for (int cut : {4, 8, 16, 32}) {
    double h = dRz_norm_on_xi(1.0, cut).hermite;
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("derivative operators on the Hermite basis") {
  auto b = hermite_basis(8);
  auto dz = hermite_derivative(Derivative::z, b);
  auto dzb = hermite_derivative(Derivative::zbar, b);
  CHECK((adjoint(dz) + dzb).max_abs() <= 1e-15);
  // derivatives commute away from the cut
  auto comm = dz * dzb - dzb * dz;
  CHECK(masked_max_abs(comm, energy_mask(*b, 6)) <= 1e-14);
  // <Xi, dR_z Xi> vanishes by parity
  auto xi = xi_coeffs(0.5, 8);
  CHECK(inner_product(xi.coeffs, dz.apply(xi.coeffs)) == Complex(0.0));
  CHECK(inner_product(xi.coeffs, dzb.apply(xi.coeffs)) == Complex(0.0));
  // strict form refuses to truncate
  CHECK_THROWS_AS(hermite_derivative(Derivative::z, b, b, TruncationMode::strict), TruncationOverflow);
  CHECK_NOTHROW(hermite_derivative(Derivative::z, b, hermite_basis(9), TruncationMode::strict));
}

TEST_CASE("sigma condition verdicts and partial sums") {
  auto pow2 = check_sigma_condition(SigmaSequence::pow2(), 10);
  CHECK(pow2.verdict == SigmaVerdict::convergent);
  REQUIRE(pow2.partial_sums.size() == 10);
  double s = 0.0;
  for (int k = 1; k <= 10; ++k) s += std::sqrt(k) * std::ldexp(1.0, -k);
  CHECK(pow2.partial_sums.back() == doctest::Approx(s).epsilon(1e-15));
  CHECK(check_sigma_condition(SigmaSequence::power(1.0, 1.0), 5).verdict == SigmaVerdict::divergent);
  CHECK(check_sigma_condition(SigmaSequence::power(1.0, 2.0), 5).verdict == SigmaVerdict::convergent);
  auto lst = check_sigma_condition(SigmaSequence::parse("list:0.5,0.25"), 10);
  CHECK(lst.verdict == SigmaVerdict::inconclusive);
  CHECK(lst.partial_sums.size() == 2);
  CHECK(SigmaSequence::parse("pow2").describe() == "pow2");
  CHECK_THROWS(SigmaSequence::parse("list:0.5,x"));
  CHECK_THROWS(SigmaSequence::parse("list:0.5,-1"));
  CHECK_THROWS(SigmaSequence::parse("cubic"));
}

TEST_CASE("tail bounds against partial-sum oracles") {
  auto seq = SigmaSequence::pow2();
  auto oracle = [&](int M) {
    double s = 0.0;
    for (int n = 400; n > M; --n) s += 2.0 * std::sqrt(2.0 * n) * std::ldexp(1.0, -n);
    return s;
  };
  CHECK(std::abs(tail_bound(5, seq) - oracle(5)) <= 1e-12);
  CHECK(tail_bound(5, seq) == doctest::Approx(0.233).epsilon(2e-3));
  CHECK(std::abs(tail_bound(0, seq) - oracle(0)) <= 1e-12);
  double prev = tail_bound(0, seq);
  for (int M = 1; M <= 30; ++M) {
    double t = tail_bound(M, seq);
    CHECK(t < prev);
    prev = t;
  }
  CHECK_THROWS_AS(tail_bound(3, SigmaSequence::power(1.0, 1.0)), DivergentSequence);
  CHECK_THROWS(tail_bound(3, SigmaSequence::list({0.5})));

  // power rule with Euler-Maclaurin tail against a long direct sum plus integral tail
  auto p2 = SigmaSequence::power(1.0, 2.0);
  double direct = 0.0;
  const int N = 4000000;
  for (int n = N; n > 3; --n) direct += 2.0 * std::sqrt(2.0 * n) / (double(n) * n);
  direct += 2.0 * std::sqrt(2.0) * 2.0 / std::sqrt(double(N));
  CHECK(tail_bound(3, p2) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("frozen-tail Dirac norms stay below the tail bound") {
  auto seq = SigmaSequence::pow2();
  for (const auto& row : tail_table(3, 8, seq)) {
    double closed = 0.0;
    for (int n = 200; n > row.M; --n) closed += 0.5 * n * std::ldexp(1.0, -2 * n);
    CHECK(row.measured == doctest::Approx(std::sqrt(closed)).epsilon(1e-9));
    CHECK(row.measured <= row.bound);
  }
  CHECK(frozen_tail_norm(0, seq) <= tail_bound(0, seq));
}

TEST_CASE("active Dirac operator on Hermite modes") {
  auto d = build_D({2, 3}, 2, 5);
  CHECK(d.op.grade() == Grade::odd);
  CHECK(self_adjoint_defect(d.op) <= 1e-14);
  // D (Xi_1 (x) Xi_2 (x) 1_f) has squared norm sum_n 2 n ||P dR_z Xi_n||^2
  auto x1 = xi_coeffs(0.5, 5), x2 = xi_coeffs(0.25, 5);
  Vector v = product_vector(d.space, {x1.coeffs, x2.coeffs}, Label{0, 0});
  Vector dv = d.op.apply(v);
  auto dz = hermite_derivative(Derivative::z, d.hermite);
  double n1 = dz.apply(x1.coeffs).norm(), n2 = dz.apply(x2.coeffs).norm();
  double expect = 2.0 * 1 * n1 * n1 * x2.norm_sq + 2.0 * 2 * n2 * n2 * x1.norm_sq;
  CHECK(std::abs(dv.norm() * dv.norm() - expect) <= 1e-13);
  // the Xi-compression of D vanishes
  CHECK(std::abs(inner_product(v, dv)) == 0.0);
  CHECK_THROWS(build_D({2, 3}, 3, 4));
}

TEST_CASE("crossed embedding is an isometric *-homomorphism") {
  auto xi = xi_coeffs(0.5, 4);
  auto h = hermite_basis(2);
  SeededRng rng(5);
  auto random_op = [&]() {
    std::vector<SparseOperator::Entry> e;
    for (std::size_t i = 0; i < h->size(); ++i)
      for (std::size_t j = 0; j < h->size(); ++j) e.push_back({i, j, rng.complex()});
    return SparseOperator::from_entries(h, h, e, Grade::even);
  };
  auto a = random_op(), b = random_op();
  auto ea = embed_crossed(a, xi), eb = embed_crossed(b, xi);
  CHECK(std::abs(operator_norm(ea.op) - operator_norm(a)) <= 1e-12);
  CHECK(((ea.op * eb.op) - embed_crossed(a * b, xi).op).max_abs() <= 1e-12);
  CHECK((adjoint(ea.op) - embed_crossed(adjoint(a), xi).op).max_abs() <= 1e-12);

  // theta_{u,v} maps to theta_{u (x) Xi, v (x) Xi}
  Vector u(h), w(h);
  for (std::size_t i = 0; i < h->size(); ++i) {
    u.set(i, rng.complex());
    w.set(i, rng.complex());
  }
  std::vector<SparseOperator::Entry> te;
  for (std::size_t i = 0; i < h->size(); ++i)
    for (std::size_t j = 0; j < h->size(); ++j) te.push_back({i, j, u.coeff(i) * std::conj(w.coeff(j))});
  auto theta = SparseOperator::from_entries(h, h, te, Grade::even);
  auto et = embed_crossed(theta, xi);
  Vector xin = xi.renormalized();
  Vector ux = product_vector(et.space, {u, xin}, Label{}), wx = product_vector(et.space, {w, xin}, Label{});
  CMatrix expect = ux.dense() * wx.dense().adjoint();
  CHECK((et.op.dense() - expect).cwiseAbs().maxCoeff() <= 1e-13);

  // associativity of the limit
  auto twice = embed_crossed(embed_crossed(a, xi).op, xi);
  CMatrix p = rank_one_projection(xin).dense();
  CMatrix direct = Eigen::kroneckerProduct(Eigen::kroneckerProduct(a.dense(), p).eval(), p).eval();
  CHECK((twice.op.dense() - direct).cwiseAbs().maxCoeff() <= 1e-13);
  // trace preserved after renormalization
  CHECK(std::abs(ea.op.dense().trace() - a.dense().trace()) <= 1e-12);
}
