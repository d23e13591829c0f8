#pragma once

#include <complex>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kkindex/opcore.hpp"
#include "kkindex/rng.hpp"

namespace kkindex {

class ContextMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LevelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Z_{n_1} x ... x Z_{n_r}; elements are indexed in mixed radix with the
// first component most significant.
class FiniteAbelianGroup {
 public:
  explicit FiniteAbelianGroup(std::vector<int> moduli);
  // "3x3", "4x2", "2"
  static FiniteAbelianGroup parse(const std::string& text);

  const std::vector<int>& moduli() const { return moduli_; }
  std::size_t rank() const { return moduli_.size(); }
  std::size_t order() const { return order_; }
  std::string name() const;

  std::vector<int> element(std::size_t index) const;
  std::size_t index(const std::vector<int>& components) const;
  std::size_t add(std::size_t a, std::size_t b) const;
  std::size_t neg(std::size_t a) const;
  std::size_t sub(std::size_t a, std::size_t b) const { return add(a, neg(b)); }
  std::size_t generator(std::size_t i) const;  // e_i

  FiniteAbelianGroup product(const FiniteAbelianGroup& other) const;
  bool operator==(const FiniteAbelianGroup& o) const { return moduli_ == o.moduli_; }

 private:
  std::vector<int> moduli_;
  std::size_t order_ = 1;
};

using GroupPtr = std::shared_ptr<const FiniteAbelianGroup>;

// Orthonormal basis of l^2(G) labeled by element components.
BasisPtr group_basis(const FiniteAbelianGroup& g);

// tau(g, h) = omega^{e(g, h)} with omega = exp(2 pi i / m); exponents kept as
// integers mod m so cocycle identities are checked exactly.
class Cocycle {
 public:
  Cocycle(GroupPtr group, int root_order, std::vector<int> exponents);

  static Cocycle trivial(GroupPtr group, int root_order = 1);
  // e(g, h) = sum_ij B_ij g_i h_j (m / gcd(n_i, n_j)) mod m
  static Cocycle bicharacter(GroupPtr group, const std::vector<std::vector<int>>& B, int root_order);
  // rank 2: e((a, b), (c, d)) = b c scaled as above; m defaults to gcd(n_1, n_2)
  static Cocycle heisenberg(GroupPtr group, int root_order = 0);
  // rank 1: e(g, h) = 1 when g + h >= n as integers, m = n (the extension Z_{n^2})
  static Cocycle carry(GroupPtr group);
  // "trivial", "heisenberg", "carry"; root_order 0 picks the natural default.
  static Cocycle named(GroupPtr group, const std::string& name, int root_order = 0);

  const GroupPtr& group() const { return group_; }
  int root_order() const { return m_; }
  int exponent(std::size_t g, std::size_t h) const;
  Complex value(std::size_t g, std::size_t h) const;
  void set_exponent(std::size_t g, std::size_t h, int e);
  bool complete() const { return exponents_.size() == group_->order() * group_->order(); }

 private:
  GroupPtr group_;
  int m_;
  std::vector<int> exponents_;
};

struct CocycleViolation {
  std::size_t g = 0, h = 0, k = 0;
  bool normalization = false;  // true: tau(e, g) or tau(g, e) != 1 (k unused)
  bool operator==(const CocycleViolation& o) const {
    return g == o.g && h == o.h && k == o.k && normalization == o.normalization;
  }
};

std::vector<CocycleViolation> check_cocycle(const Cocycle& tau);

// m-th root of unity omega^j.
Complex root_of_unity(int m, long long j);

// Central extension G x mu_m with (g, a)(h, b) = (g + h, a + b + e(g, h)).
// Element index = g * m + a, phase omega^a.
class Extension {
 public:
  explicit Extension(Cocycle tau);
  const Cocycle& cocycle() const { return tau_; }
  const FiniteAbelianGroup& group() const { return *tau_.group(); }
  int root_order() const { return tau_.root_order(); }
  std::size_t size() const { return group().order() * static_cast<std::size_t>(root_order()); }

  std::size_t make(std::size_t g, int a) const;
  std::size_t base(std::size_t x) const { return x / static_cast<std::size_t>(root_order()); }
  int phase(std::size_t x) const { return static_cast<int>(x % static_cast<std::size_t>(root_order())); }
  std::size_t mul(std::size_t x, std::size_t y) const;
  std::size_t inv(std::size_t x) const;
  std::size_t central(int a) const { return make(0, a); }

 private:
  Cocycle tau_;
};

using ExtensionPtr = std::shared_ptr<const Extension>;

ExtensionPtr make_extension(const Cocycle& tau);

// Complex function on G^tau with an optional validated level tag.
struct GroupAlgebraElement {
  ExtensionPtr ext;
  std::vector<Complex> values;
  std::optional<int> level;

  static GroupAlgebraElement zero(ExtensionPtr ext);
  static GroupAlgebraElement delta(ExtensionPtr ext, std::size_t x, Complex v = 1.0);
  // Unit for the normalized convolution: m * delta_e.
  static GroupAlgebraElement unit(ExtensionPtr ext);
  static GroupAlgebraElement random(ExtensionPtr ext, SeededRng& rng);
  // Validates the level and tags the element; throws LevelError otherwise.
  static GroupAlgebraElement at_level(ExtensionPtr ext, std::vector<Complex> values, int level);

  bool is_level(int k, double tol = 1e-12) const;
  double max_abs() const;
  GroupAlgebraElement operator+(const GroupAlgebraElement& o) const;
  GroupAlgebraElement operator-(const GroupAlgebraElement& o) const;
  GroupAlgebraElement scaled(Complex s) const;
};

// (f * h)(x) = (1/m) sum_{y in G^tau} f(y) h(y^-1 x)
GroupAlgebraElement convolve(const GroupAlgebraElement& f, const GroupAlgebraElement& h);
// f^*(x) = conj(f(x^-1))
GroupAlgebraElement involution(const GroupAlgebraElement& f);
// (P_k f)(x) = (1/m) sum_zeta zeta^-k f(zeta x)
GroupAlgebraElement level_project(const GroupAlgebraElement& f, int k);
// f^vee(x) = f(x^-1); maps level -k to level k
GroupAlgebraElement inverse_transform(const GroupAlgebraElement& f);

// CSV table with columns g_1..g_r, phase, re, im; one row per element of G^tau.
void write_table_csv(std::ostream& out, const GroupAlgebraElement& f);

// Finite G-set given by its action table act[g * points + x] = g.x.
struct GSet {
  GroupPtr group;
  std::size_t points = 0;
  std::vector<std::size_t> act;

  std::size_t apply(std::size_t g, std::size_t x) const { return act[g * points + x]; }
  static GSet translation(GroupPtr group);
  // G acting on G x {0..copies-1} by translation of the first coordinate.
  static GSet free_copies(GroupPtr group, std::size_t copies);
  bool is_translation() const;
};

using GSetPtr = std::shared_ptr<const GSet>;

// Product action of G_1 x G_2 on X_1 x X_2.
GSetPtr product_gset(const GSet& a, const GSet& b);

// Function a(g, x) on G x X, stored at g * points + x.
struct CrossedProductElement {
  GSetPtr space;
  std::vector<Complex> values;

  Complex at(std::size_t g, std::size_t x) const { return values[g * space->points + x]; }
  static CrossedProductElement zero(GSetPtr space);
  static CrossedProductElement delta(GSetPtr space, std::size_t g, std::size_t x, Complex v = 1.0);
  static CrossedProductElement random(GSetPtr space, SeededRng& rng);
  double max_abs() const;
  CrossedProductElement operator-(const CrossedProductElement& o) const;
};

// (a * b)(g, x) = sum_h a(h, x) b(h^-1 g, h^-1 x)
CrossedProductElement crossed_convolve(const CrossedProductElement& a, const CrossedProductElement& b);
// a^*(g, x) = conj(a(g^-1, g^-1 x))
CrossedProductElement crossed_involution(const CrossedProductElement& a);
// Regular representation on l^2(X): (a phi)(x) = sum_h a(h, x) phi(h^-1 x).
CMatrix crossed_matrix(const CrossedProductElement& a);
// Isomorphism G x| C(G) -> End(l^2(G)), M[x][y] = a(x - y, x).
SparseOperator schatten_map(const CrossedProductElement& a);

class CutoffError : public std::domain_error {
 public:
  CutoffError(const std::string& what, std::size_t point) : std::domain_error(what), point_(point) {}
  std::size_t point() const { return point_; }

 private:
  std::size_t point_;
};

// [c](g, x) = sqrt(c(x) c(g^-1 x)); requires sum_g c(g.x) = 1 for every x.
CrossedProductElement mishchenko(const std::vector<double>& c, GSetPtr space, double tol = 1e-12);

// Elements of G^tau x| L^2(G, tau): phi(x, g) with x, g in G^tau, level -1 in x.
struct TwistedModuleElement {
  ExtensionPtr ext;
  std::vector<Complex> values;  // index x * |G^tau| + g

  Complex at(std::size_t x, std::size_t g) const { return values[x * ext->size() + g]; }
  double max_abs() const;
  TwistedModuleElement operator-(const TwistedModuleElement& o) const;
  bool is_level(int level_x, int level_g, double tol = 1e-12) const;
};

// Functions a(h, x) with h in G^tau and x in G, acting on the module on the left.
struct TwistedCrossedElement {
  ExtensionPtr ext;
  std::vector<Complex> values;  // index h * |G| + x

  Complex at(std::size_t h, std::size_t x) const { return values[h * ext->group().order() + x]; }
  // Level-0 pullback of an element of G x| C(G).
  static TwistedCrossedElement pullback(ExtensionPtr ext, const CrossedProductElement& a);
  static TwistedCrossedElement random(ExtensionPtr ext, SeededRng& rng);
};

TwistedCrossedElement level_project(const TwistedCrossedElement& a, int k);
TwistedModuleElement level_project_g(const TwistedModuleElement& phi, int k);

// m(phi1 (x) phi2)(x, g) = phi1(x) phi2(x^-1 g); phi2 must be at level 1.
TwistedModuleElement m_iso(const std::vector<Complex>& phi1, const GroupAlgebraElement& phi2);

// (a * phi)(x, g) = (1/m) sum_h a(h, x) phi(h^-1 x, h^-1 g)
TwistedModuleElement module_left(const TwistedCrossedElement& a, const TwistedModuleElement& phi);
// (phi * b)(x, g) = (1/m) sum_h phi(x, h) b(h^-1 g)
TwistedModuleElement module_right(const TwistedModuleElement& phi, const GroupAlgebraElement& b);
// <phi, psi>(g) = (1/m) sum_h <phi(., h), psi(., h g)>_{L^2(G, tau)}
GroupAlgebraElement module_inner(const TwistedModuleElement& phi, const TwistedModuleElement& psi);

// (a * phi)(x) = sum_h a(h, x) phi(x - h) for a in G x| C(G), phi in l^2(G).
std::vector<Complex> crossed_apply(const CrossedProductElement& a, const std::vector<Complex>& phi);

// Transpose of matrices End(V) -> End(V^*).
CMatrix transpose_iso(const CMatrix& f);

// Dimensions of the simple blocks of the level-1 twisted group algebra,
// from the center dimension computed by a linear solve.
std::vector<int> decompose_twisted_algebra(const Cocycle& tau);
std::size_t twisted_center_dimension(const Cocycle& tau);

// Fourier data of a real loop l(theta) = c + sum_j a_j cos(j theta) + b_j sin(j theta).
struct TrigLoop {
  double constant = 0.0;
  std::vector<double> cos;  // a_1, a_2, ...
  std::vector<double> sin;  // b_1, b_2, ...
};

// exp(i integral_0^{2 pi} l1 l2' dtheta) * t2^{k n1}
Complex loop_cocycle(const TrigLoop& l1, const TrigLoop& l2, int k, Complex t2, int n1);
double loop_pairing(const TrigLoop& l1, const TrigLoop& l2);

}  // namespace kkindex
