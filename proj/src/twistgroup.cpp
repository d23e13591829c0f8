#include "kkindex/twistgroup.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace kkindex {

namespace {

int mod(long long a, int m) {
  long long r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

void require_same(const ExtensionPtr& a, const ExtensionPtr& b, const char* where) {
  if (a != b) throw ContextMismatch(std::string(where) + ": elements live on different extensions");
}

void require_same(const GSetPtr& a, const GSetPtr& b, const char* where) {
  if (a != b) throw ContextMismatch(std::string(where) + ": elements live on different G-sets");
}

}  // namespace

// ------------------------------------------------------------------ groups

FiniteAbelianGroup::FiniteAbelianGroup(std::vector<int> moduli) : moduli_(std::move(moduli)) {
  if (moduli_.empty()) throw std::invalid_argument("FiniteAbelianGroup: no cyclic factors");
  for (int n : moduli_) {
    if (n < 1) throw std::invalid_argument("FiniteAbelianGroup: moduli must be >= 1");
    order_ *= static_cast<std::size_t>(n);
  }
}

FiniteAbelianGroup FiniteAbelianGroup::parse(const std::string& text) {
  std::vector<int> moduli;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t pos = 0;
    int n = 0;
    try {
      n = std::stoi(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != part.size() || n < 1)
      throw std::invalid_argument("group: malformed factor '" + part + "' in '" + text + "'");
    moduli.push_back(n);
  }
  return FiniteAbelianGroup(moduli);
}

std::string FiniteAbelianGroup::name() const {
  std::string out;
  for (std::size_t i = 0; i < moduli_.size(); ++i) out += (i ? "x" : "") + std::to_string(moduli_[i]);
  return out;
}

std::vector<int> FiniteAbelianGroup::element(std::size_t index) const {
  if (index >= order_) throw std::out_of_range("FiniteAbelianGroup: index out of range");
  std::vector<int> c(moduli_.size());
  for (std::size_t i = moduli_.size(); i-- > 0;) {
    c[i] = static_cast<int>(index % static_cast<std::size_t>(moduli_[i]));
    index /= static_cast<std::size_t>(moduli_[i]);
  }
  return c;
}

std::size_t FiniteAbelianGroup::index(const std::vector<int>& components) const {
  if (components.size() != moduli_.size()) throw std::invalid_argument("FiniteAbelianGroup: wrong rank");
  std::size_t out = 0;
  for (std::size_t i = 0; i < moduli_.size(); ++i)
    out = out * static_cast<std::size_t>(moduli_[i]) + static_cast<std::size_t>(mod(components[i], moduli_[i]));
  return out;
}

std::size_t FiniteAbelianGroup::add(std::size_t a, std::size_t b) const {
  auto x = element(a), y = element(b);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  return index(x);
}

std::size_t FiniteAbelianGroup::neg(std::size_t a) const {
  auto x = element(a);
  for (int& v : x) v = -v;
  return index(x);
}

std::size_t FiniteAbelianGroup::generator(std::size_t i) const {
  if (i >= rank()) throw std::out_of_range("FiniteAbelianGroup: generator index");
  std::vector<int> c(rank(), 0);
  c[i] = 1;
  return index(c);
}

FiniteAbelianGroup FiniteAbelianGroup::product(const FiniteAbelianGroup& other) const {
  std::vector<int> m = moduli_;
  m.insert(m.end(), other.moduli_.begin(), other.moduli_.end());
  return FiniteAbelianGroup(m);
}

BasisPtr group_basis(const FiniteAbelianGroup& g) {
  std::vector<Label> labels;
  for (std::size_t i = 0; i < g.order(); ++i) labels.push_back(g.element(i));
  std::vector<double> gram(labels.size(), 1.0);
  return std::make_shared<const Basis>(std::vector<FactorLayout>{{"group", g.rank(), false}}, std::move(labels),
                                       std::move(gram));
}

// ---------------------------------------------------------------- cocycles

Complex root_of_unity(int m, long long j) {
  int r = mod(j, m);
  if (r == 0) return 1.0;
  if (2 * r == m) return -1.0;
  if (4 * r == m) return Complex(0.0, 1.0);
  if (4 * r == 3 * m) return Complex(0.0, -1.0);
  double t = 2.0 * std::numbers::pi * r / m;
  return {std::cos(t), std::sin(t)};
}

Cocycle::Cocycle(GroupPtr group, int root_order, std::vector<int> exponents)
    : group_(std::move(group)), m_(root_order), exponents_(std::move(exponents)) {
  if (m_ < 1) throw std::invalid_argument("Cocycle: root order must be >= 1");
  for (int& e : exponents_) e = mod(e, m_);
}

Cocycle Cocycle::trivial(GroupPtr group, int root_order) {
  std::size_t n = group->order();
  return Cocycle(std::move(group), root_order, std::vector<int>(n * n, 0));
}

Cocycle Cocycle::bicharacter(GroupPtr group, const std::vector<std::vector<int>>& B, int root_order) {
  const auto& n = group->moduli();
  std::size_t r = n.size();
  if (B.size() != r) throw std::invalid_argument("bicharacter: matrix size must match the rank");
  std::vector<std::vector<long long>> scale(r, std::vector<long long>(r));
  for (std::size_t i = 0; i < r; ++i) {
    if (B[i].size() != r) throw std::invalid_argument("bicharacter: matrix size must match the rank");
    for (std::size_t j = 0; j < r; ++j) {
      int g = std::gcd(n[i], n[j]);
      if (B[i][j] != 0 && root_order % g != 0)
        throw std::invalid_argument("bicharacter: root order incompatible with the moduli");
      scale[i][j] = static_cast<long long>(B[i][j]) * (root_order / g);
    }
  }
  std::size_t N = group->order();
  std::vector<int> e(N * N);
  for (std::size_t a = 0; a < N; ++a) {
    auto x = group->element(a);
    for (std::size_t b = 0; b < N; ++b) {
      auto y = group->element(b);
      long long s = 0;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) s += scale[i][j] * x[i] * y[j];
      e[a * N + b] = mod(s, root_order);
    }
  }
  return Cocycle(std::move(group), root_order, std::move(e));
}

Cocycle Cocycle::heisenberg(GroupPtr group, int root_order) {
  if (group->rank() != 2) throw std::invalid_argument("heisenberg cocycle needs a rank-2 group");
  int g = std::gcd(group->moduli()[0], group->moduli()[1]);
  int m = root_order > 0 ? root_order : g;
  if (m % g != 0) throw std::invalid_argument("heisenberg cocycle: root order must be a multiple of gcd(n1, n2)");
  return bicharacter(std::move(group), {{0, 0}, {1, 0}}, m);
}

Cocycle Cocycle::carry(GroupPtr group) {
  if (group->rank() != 1) throw std::invalid_argument("carry cocycle needs a cyclic group");
  int n = group->moduli()[0];
  std::size_t N = group->order();
  std::vector<int> e(N * N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) e[a * N + b] = static_cast<int>(a + b) >= n ? 1 : 0;
  return Cocycle(std::move(group), n, std::move(e));
}

Cocycle Cocycle::named(GroupPtr group, const std::string& name, int root_order) {
  if (name == "trivial") return trivial(std::move(group), root_order > 0 ? root_order : 1);
  if (name == "heisenberg") return heisenberg(std::move(group), root_order);
  if (name == "carry") {
    if (root_order > 0 && root_order != group->moduli()[0])
      throw std::invalid_argument("carry cocycle: root order must equal the group order");
    return carry(std::move(group));
  }
  throw std::invalid_argument("cocycle: unknown name '" + name + "'");
}

int Cocycle::exponent(std::size_t g, std::size_t h) const {
  if (!complete()) throw std::logic_error("Cocycle: incomplete table");
  return exponents_[g * group_->order() + h];
}

Complex Cocycle::value(std::size_t g, std::size_t h) const { return root_of_unity(m_, exponent(g, h)); }

void Cocycle::set_exponent(std::size_t g, std::size_t h, int e) {
  if (!complete()) throw std::logic_error("Cocycle: incomplete table");
  exponents_[g * group_->order() + h] = mod(e, m_);
}

std::vector<CocycleViolation> check_cocycle(const Cocycle& tau) {
  if (!tau.complete()) throw std::invalid_argument("check_cocycle: incomplete table");
  const auto& G = *tau.group();
  const int m = tau.root_order();
  std::size_t N = G.order();
  std::vector<CocycleViolation> out;
  for (std::size_t g = 0; g < N; ++g)
    if (tau.exponent(0, g) != 0 || tau.exponent(g, 0) != 0) out.push_back({g, 0, 0, true});
  for (std::size_t g = 0; g < N; ++g)
    for (std::size_t h = 0; h < N; ++h) {
      std::size_t gh = G.add(g, h);
      for (std::size_t k = 0; k < N; ++k) {
        int lhs = tau.exponent(g, h) + tau.exponent(gh, k);
        int rhs = tau.exponent(h, k) + tau.exponent(g, G.add(h, k));
        if (mod(lhs - rhs, m) != 0) out.push_back({g, h, k, false});
      }
    }
  return out;
}

// --------------------------------------------------------------- extension

Extension::Extension(Cocycle tau) : tau_(std::move(tau)) {
  if (!check_cocycle(tau_).empty()) throw std::invalid_argument("Extension: table is not a normalized cocycle");
}

ExtensionPtr make_extension(const Cocycle& tau) { return std::make_shared<const Extension>(tau); }

std::size_t Extension::make(std::size_t g, int a) const {
  return g * static_cast<std::size_t>(root_order()) + static_cast<std::size_t>(mod(a, root_order()));
}

std::size_t Extension::mul(std::size_t x, std::size_t y) const {
  std::size_t g = base(x), h = base(y);
  return make(group().add(g, h), phase(x) + phase(y) + tau_.exponent(g, h));
}

std::size_t Extension::inv(std::size_t x) const {
  std::size_t g = base(x), ng = group().neg(g);
  return make(ng, -phase(x) - tau_.exponent(g, ng));
}

// ---------------------------------------------------- group algebra elements

GroupAlgebraElement GroupAlgebraElement::zero(ExtensionPtr ext) {
  std::size_t n = ext->size();
  return GroupAlgebraElement{std::move(ext), std::vector<Complex>(n, 0.0), std::nullopt};
}

GroupAlgebraElement GroupAlgebraElement::delta(ExtensionPtr ext, std::size_t x, Complex v) {
  auto out = zero(std::move(ext));
  out.values.at(x) = v;
  return out;
}

GroupAlgebraElement GroupAlgebraElement::unit(ExtensionPtr ext) {
  double m = ext->root_order();
  return delta(std::move(ext), 0, m);
}

GroupAlgebraElement GroupAlgebraElement::random(ExtensionPtr ext, SeededRng& rng) {
  auto out = zero(std::move(ext));
  for (auto& v : out.values) v = rng.complex();
  return out;
}

GroupAlgebraElement GroupAlgebraElement::at_level(ExtensionPtr ext, std::vector<Complex> values, int level) {
  if (values.size() != ext->size()) throw std::invalid_argument("at_level: table size mismatch");
  GroupAlgebraElement out{std::move(ext), std::move(values), std::nullopt};
  if (!out.is_level(level)) throw LevelError("at_level: function is not at level " + std::to_string(level));
  out.level = level;
  return out;
}

bool GroupAlgebraElement::is_level(int k, double tol) const {
  const int m = ext->root_order();
  for (std::size_t x = 0; x < values.size(); ++x)
    for (int a = 1; a < m; ++a) {
      std::size_t zx = ext->mul(ext->central(a), x);
      if (std::abs(values[zx] - root_of_unity(m, static_cast<long long>(a) * k) * values[x]) > tol) return false;
    }
  return true;
}

double GroupAlgebraElement::max_abs() const {
  double out = 0.0;
  for (auto v : values) out = std::max(out, std::abs(v));
  return out;
}

GroupAlgebraElement GroupAlgebraElement::operator+(const GroupAlgebraElement& o) const {
  require_same(ext, o.ext, "GroupAlgebraElement::operator+");
  GroupAlgebraElement out{ext, values, level == o.level ? level : std::nullopt};
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] += o.values[i];
  return out;
}

GroupAlgebraElement GroupAlgebraElement::operator-(const GroupAlgebraElement& o) const {
  return *this + o.scaled(-1.0);
}

GroupAlgebraElement GroupAlgebraElement::scaled(Complex s) const {
  GroupAlgebraElement out = *this;
  for (auto& v : out.values) v *= s;
  return out;
}

GroupAlgebraElement convolve(const GroupAlgebraElement& f, const GroupAlgebraElement& h) {
  require_same(f.ext, h.ext, "convolve");
  const Extension& E = *f.ext;
  std::size_t n = E.size();
  GroupAlgebraElement out = GroupAlgebraElement::zero(f.ext);
  const double norm = 1.0 / E.root_order();
  for (std::size_t y = 0; y < n; ++y) {
    if (f.values[y] == Complex(0.0)) continue;
    std::size_t yi = E.inv(y);
    for (std::size_t x = 0; x < n; ++x) out.values[x] += f.values[y] * h.values[E.mul(yi, x)];
  }
  for (auto& v : out.values) v *= norm;
  if (f.level && h.level && *f.level == *h.level) out.level = f.level;
  return out;
}

GroupAlgebraElement involution(const GroupAlgebraElement& f) {
  GroupAlgebraElement out = GroupAlgebraElement::zero(f.ext);
  for (std::size_t x = 0; x < f.values.size(); ++x) out.values[x] = std::conj(f.values[f.ext->inv(x)]);
  out.level = f.level;
  return out;
}

GroupAlgebraElement level_project(const GroupAlgebraElement& f, int k) {
  const Extension& E = *f.ext;
  const int m = E.root_order();
  GroupAlgebraElement out = GroupAlgebraElement::zero(f.ext);
  for (std::size_t x = 0; x < f.values.size(); ++x) {
    Complex s = 0.0;
    for (int a = 0; a < m; ++a) s += root_of_unity(m, -static_cast<long long>(a) * k) * f.values[E.mul(E.central(a), x)];
    out.values[x] = s / static_cast<double>(m);
  }
  out.level = k;
  return out;
}

GroupAlgebraElement inverse_transform(const GroupAlgebraElement& f) {
  GroupAlgebraElement out = GroupAlgebraElement::zero(f.ext);
  for (std::size_t x = 0; x < f.values.size(); ++x) out.values[x] = f.values[f.ext->inv(x)];
  if (f.level) out.level = -*f.level;
  return out;
}

void write_table_csv(std::ostream& out, const GroupAlgebraElement& f) {
  const Extension& E = *f.ext;
  for (std::size_t i = 0; i < E.group().rank(); ++i) out << 'g' << i + 1 << ',';
  out << "phase,re,im\n";
  char buf[64];
  for (std::size_t x = 0; x < f.values.size(); ++x) {
    for (int c : E.group().element(E.base(x))) out << c << ',';
    out << E.phase(x);
    std::snprintf(buf, sizeof buf, ",%.17g", f.values[x].real());
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", f.values[x].imag());
    out << buf;
  }
}

// ------------------------------------------------------------------ G-sets

GSet GSet::translation(GroupPtr group) { return free_copies(std::move(group), 1); }

GSet GSet::free_copies(GroupPtr group, std::size_t copies) {
  if (copies == 0) throw std::invalid_argument("GSet: need at least one copy");
  GSet s;
  s.points = group->order() * copies;
  s.act.resize(group->order() * s.points);
  for (std::size_t g = 0; g < group->order(); ++g)
    for (std::size_t x = 0; x < s.points; ++x)
      s.act[g * s.points + x] = group->add(g, x / copies) * copies + x % copies;
  s.group = std::move(group);
  return s;
}

bool GSet::is_translation() const {
  if (points != group->order()) return false;
  for (std::size_t g = 0; g < group->order(); ++g)
    for (std::size_t x = 0; x < points; ++x)
      if (apply(g, x) != group->add(g, x)) return false;
  return true;
}

GSetPtr product_gset(const GSet& a, const GSet& b) {
  auto s = std::make_shared<GSet>();
  s->group = std::make_shared<const FiniteAbelianGroup>(a.group->product(*b.group));
  s->points = a.points * b.points;
  std::size_t n2 = b.group->order();
  s->act.resize(s->group->order() * s->points);
  for (std::size_t g = 0; g < s->group->order(); ++g)
    for (std::size_t x = 0; x < s->points; ++x) {
      std::size_t g1 = g / n2, g2 = g % n2, x1 = x / b.points, x2 = x % b.points;
      s->act[g * s->points + x] = a.apply(g1, x1) * b.points + b.apply(g2, x2);
    }
  return s;
}

// --------------------------------------------------------- crossed products

CrossedProductElement CrossedProductElement::zero(GSetPtr space) {
  std::size_t n = space->group->order() * space->points;
  return CrossedProductElement{std::move(space), std::vector<Complex>(n, 0.0)};
}

CrossedProductElement CrossedProductElement::delta(GSetPtr space, std::size_t g, std::size_t x, Complex v) {
  auto out = zero(std::move(space));
  out.values.at(g * out.space->points + x) = v;
  return out;
}

CrossedProductElement CrossedProductElement::random(GSetPtr space, SeededRng& rng) {
  auto out = zero(std::move(space));
  for (auto& v : out.values) v = rng.complex();
  return out;
}

double CrossedProductElement::max_abs() const {
  double out = 0.0;
  for (auto v : values) out = std::max(out, std::abs(v));
  return out;
}

CrossedProductElement CrossedProductElement::operator-(const CrossedProductElement& o) const {
  require_same(space, o.space, "CrossedProductElement::operator-");
  CrossedProductElement out = *this;
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] -= o.values[i];
  return out;
}

CrossedProductElement crossed_convolve(const CrossedProductElement& a, const CrossedProductElement& b) {
  require_same(a.space, b.space, "crossed_convolve");
  const GSet& S = *a.space;
  const auto& G = *S.group;
  auto out = CrossedProductElement::zero(a.space);
  for (std::size_t h = 0; h < G.order(); ++h) {
    std::size_t hi = G.neg(h);
    for (std::size_t x = 0; x < S.points; ++x) {
      Complex ahx = a.at(h, x);
      if (ahx == Complex(0.0)) continue;
      std::size_t hx = S.apply(hi, x);
      for (std::size_t g = 0; g < G.order(); ++g) out.values[g * S.points + x] += ahx * b.at(G.add(hi, g), hx);
    }
  }
  return out;
}

CrossedProductElement crossed_involution(const CrossedProductElement& a) {
  const GSet& S = *a.space;
  const auto& G = *S.group;
  auto out = CrossedProductElement::zero(a.space);
  for (std::size_t g = 0; g < G.order(); ++g) {
    std::size_t gi = G.neg(g);
    for (std::size_t x = 0; x < S.points; ++x) out.values[g * S.points + x] = std::conj(a.at(gi, S.apply(gi, x)));
  }
  return out;
}

CMatrix crossed_matrix(const CrossedProductElement& a) {
  const GSet& S = *a.space;
  const auto& G = *S.group;
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(S.points), static_cast<Eigen::Index>(S.points));
  for (std::size_t h = 0; h < G.order(); ++h)
    for (std::size_t x = 0; x < S.points; ++x)
      m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(S.apply(G.neg(h), x))) += a.at(h, x);
  return m;
}

SparseOperator schatten_map(const CrossedProductElement& a) {
  const GSet& S = *a.space;
  if (!S.is_translation()) throw std::invalid_argument("schatten_map: needs the translation action of G on itself");
  const auto& G = *S.group;
  auto basis = group_basis(G);
  std::vector<SparseOperator::Entry> entries;
  for (std::size_t x = 0; x < G.order(); ++x)
    for (std::size_t y = 0; y < G.order(); ++y) {
      Complex v = a.at(G.sub(x, y), x);
      if (v != Complex(0.0)) entries.push_back({x, y, v});
    }
  return SparseOperator::from_entries(basis, basis, entries, Grade::even);
}

CrossedProductElement mishchenko(const std::vector<double>& c, GSetPtr space, double tol) {
  const GSet& S = *space;
  const auto& G = *S.group;
  if (c.size() != S.points) throw std::invalid_argument("mishchenko: cut-off size mismatch");
  for (std::size_t x = 0; x < S.points; ++x) {
    if (c[x] < 0.0) throw CutoffError("mishchenko: negative cut-off value", x);
    double s = 0.0;
    for (std::size_t g = 0; g < G.order(); ++g) s += c[S.apply(g, x)];
    if (std::abs(s - 1.0) > tol)
      throw CutoffError("mishchenko: cut-off orbit sum is not 1 at point " + std::to_string(x), x);
  }
  auto out = CrossedProductElement::zero(space);
  for (std::size_t g = 0; g < G.order(); ++g)
    for (std::size_t x = 0; x < S.points; ++x)
      out.values[g * S.points + x] = std::sqrt(c[x] * c[S.apply(G.neg(g), x)]);
  return out;
}

// ---------------------------------------------------------- twisted modules

double TwistedModuleElement::max_abs() const {
  double out = 0.0;
  for (auto v : values) out = std::max(out, std::abs(v));
  return out;
}

TwistedModuleElement TwistedModuleElement::operator-(const TwistedModuleElement& o) const {
  require_same(ext, o.ext, "TwistedModuleElement::operator-");
  TwistedModuleElement out = *this;
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] -= o.values[i];
  return out;
}

bool TwistedModuleElement::is_level(int level_x, int level_g, double tol) const {
  const Extension& E = *ext;
  const int m = E.root_order();
  std::size_t n = E.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t g = 0; g < n; ++g)
      for (int a = 1; a < m; ++a) {
        std::size_t zx = E.mul(E.central(a), x), zg = E.mul(E.central(a), g);
        if (std::abs(at(zx, g) - root_of_unity(m, static_cast<long long>(a) * level_x) * at(x, g)) > tol) return false;
        if (std::abs(at(x, zg) - root_of_unity(m, static_cast<long long>(a) * level_g) * at(x, g)) > tol) return false;
      }
  return true;
}

TwistedCrossedElement TwistedCrossedElement::pullback(ExtensionPtr ext, const CrossedProductElement& a) {
  if (!a.space->is_translation() || !(*a.space->group == ext->group()))
    throw ContextMismatch("pullback: crossed product must be over the translation action of the same group");
  std::size_t N = ext->group().order();
  TwistedCrossedElement out{ext, std::vector<Complex>(ext->size() * N, 0.0)};
  for (std::size_t h = 0; h < ext->size(); ++h)
    for (std::size_t x = 0; x < N; ++x) out.values[h * N + x] = a.at(ext->base(h), x);
  return out;
}

TwistedCrossedElement TwistedCrossedElement::random(ExtensionPtr ext, SeededRng& rng) {
  std::size_t n = ext->size() * ext->group().order();
  TwistedCrossedElement out{std::move(ext), std::vector<Complex>(n)};
  for (auto& v : out.values) v = rng.complex();
  return out;
}

TwistedCrossedElement level_project(const TwistedCrossedElement& a, int k) {
  const Extension& E = *a.ext;
  const int m = E.root_order();
  std::size_t N = E.group().order();
  TwistedCrossedElement out{a.ext, std::vector<Complex>(a.values.size(), 0.0)};
  for (std::size_t h = 0; h < E.size(); ++h)
    for (int z = 0; z < m; ++z) {
      Complex w = root_of_unity(m, -static_cast<long long>(z) * k) / static_cast<double>(m);
      std::size_t zh = E.mul(E.central(z), h);
      for (std::size_t x = 0; x < N; ++x) out.values[h * N + x] += w * a.at(zh, x);
    }
  return out;
}

TwistedModuleElement level_project_g(const TwistedModuleElement& phi, int k) {
  const Extension& E = *phi.ext;
  const int m = E.root_order();
  std::size_t n = E.size();
  TwistedModuleElement out{phi.ext, std::vector<Complex>(phi.values.size(), 0.0)};
  for (std::size_t g = 0; g < n; ++g)
    for (int z = 0; z < m; ++z) {
      Complex w = root_of_unity(m, -static_cast<long long>(z) * k) / static_cast<double>(m);
      std::size_t zg = E.mul(E.central(z), g);
      for (std::size_t x = 0; x < n; ++x) out.values[x * n + g] += w * phi.at(x, zg);
    }
  return out;
}

TwistedModuleElement m_iso(const std::vector<Complex>& phi1, const GroupAlgebraElement& phi2) {
  const Extension& E = *phi2.ext;
  if (phi1.size() != E.group().order()) throw std::invalid_argument("m_iso: phi1 must be a function on G");
  if (!phi2.is_level(1)) throw LevelError("m_iso: phi2 must be at level 1");
  std::size_t n = E.size();
  TwistedModuleElement out{phi2.ext, std::vector<Complex>(n * n)};
  for (std::size_t x = 0; x < n; ++x) {
    std::size_t xi = E.inv(x);
    for (std::size_t g = 0; g < n; ++g) out.values[x * n + g] = phi1[E.base(x)] * phi2.values[E.mul(xi, g)];
  }
  return out;
}

TwistedModuleElement module_left(const TwistedCrossedElement& a, const TwistedModuleElement& phi) {
  require_same(a.ext, phi.ext, "module_left");
  const Extension& E = *a.ext;
  std::size_t n = E.size();
  TwistedModuleElement out{phi.ext, std::vector<Complex>(n * n, 0.0)};
  for (std::size_t h = 0; h < n; ++h) {
    std::size_t hi = E.inv(h);
    for (std::size_t x = 0; x < n; ++x) {
      Complex ahx = a.at(h, E.base(x));
      if (ahx == Complex(0.0)) continue;
      std::size_t hx = E.mul(hi, x);
      for (std::size_t g = 0; g < n; ++g) out.values[x * n + g] += ahx * phi.at(hx, E.mul(hi, g));
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(E.root_order());
  return out;
}

TwistedModuleElement module_right(const TwistedModuleElement& phi, const GroupAlgebraElement& b) {
  require_same(phi.ext, b.ext, "module_right");
  const Extension& E = *phi.ext;
  std::size_t n = E.size();
  TwistedModuleElement out{phi.ext, std::vector<Complex>(n * n, 0.0)};
  for (std::size_t h = 0; h < n; ++h) {
    std::size_t hi = E.inv(h);
    for (std::size_t g = 0; g < n; ++g) {
      Complex bv = b.values[E.mul(hi, g)];
      if (bv == Complex(0.0)) continue;
      for (std::size_t x = 0; x < n; ++x) out.values[x * n + g] += phi.at(x, h) * bv;
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(E.root_order());
  return out;
}

GroupAlgebraElement module_inner(const TwistedModuleElement& phi, const TwistedModuleElement& psi) {
  require_same(phi.ext, psi.ext, "module_inner");
  const Extension& E = *phi.ext;
  std::size_t n = E.size();
  const double m = E.root_order();
  auto out = GroupAlgebraElement::zero(phi.ext);
  for (std::size_t g = 0; g < n; ++g) {
    Complex s = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      std::size_t hg = E.mul(h, g);
      for (std::size_t x = 0; x < n; ++x) s += std::conj(phi.at(x, h)) * psi.at(x, hg);
    }
    out.values[g] = s / (m * m);
  }
  return out;
}

std::vector<Complex> crossed_apply(const CrossedProductElement& a, const std::vector<Complex>& phi) {
  if (phi.size() != a.space->points) throw std::invalid_argument("crossed_apply: vector size mismatch");
  CVector v = Eigen::Map<const CVector>(phi.data(), static_cast<Eigen::Index>(phi.size()));
  CVector r = crossed_matrix(a) * v;
  return std::vector<Complex>(r.data(), r.data() + r.size());
}

CMatrix transpose_iso(const CMatrix& f) { return f.transpose(); }

std::size_t twisted_center_dimension(const Cocycle& tau) {
  auto ext = make_extension(tau);
  const auto& G = ext->group();
  std::size_t N = G.order();
  // Level-1 basis e_g with e_g(g, a) = omega^a.
  std::vector<GroupAlgebraElement> basis;
  for (std::size_t g = 0; g < N; ++g)
    basis.push_back(level_project(GroupAlgebraElement::delta(ext, ext->make(g, 0)), 1).scaled(tau.root_order()));
  // Stack the commutators [e_h, e_g] for all h as columns indexed by g.
  CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(N * ext->size()), static_cast<Eigen::Index>(N));
  for (std::size_t g = 0; g < N; ++g)
    for (std::size_t h = 0; h < N; ++h) {
      auto c = convolve(basis[h], basis[g]) - convolve(basis[g], basis[h]);
      for (std::size_t x = 0; x < ext->size(); ++x)
        A(static_cast<Eigen::Index>(h * ext->size() + x), static_cast<Eigen::Index>(g)) = c.values[x];
    }
  Eigen::FullPivLU<CMatrix> lu(A);
  lu.setThreshold(1e-10);
  return N - static_cast<std::size_t>(lu.rank());
}

std::vector<int> decompose_twisted_algebra(const Cocycle& tau) {
  std::size_t N = tau.group()->order();
  std::size_t s = twisted_center_dimension(tau);
  // All simple blocks of a twisted abelian group algebra have the same size.
  int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(N) / static_cast<double>(s))));
  if (static_cast<std::size_t>(d) * static_cast<std::size_t>(d) * s != N)
    throw std::logic_error("decompose_twisted_algebra: center dimension inconsistent with equal blocks");
  return std::vector<int>(s, d);
}

// ---------------------------------------------------------------- loops

double loop_pairing(const TrigLoop& l1, const TrigLoop& l2) {
  // l2' = sum_j j (-a_j sin + b_j cos); integral of cos^2 and sin^2 over a period is pi.
  double s = 0.0;
  std::size_t J = std::max({l1.cos.size(), l1.sin.size(), l2.cos.size(), l2.sin.size()});
  auto get = [](const std::vector<double>& v, std::size_t j) { return j < v.size() ? v[j] : 0.0; };
  for (std::size_t j = 0; j < J; ++j) {
    double n = static_cast<double>(j + 1);
    s += std::numbers::pi * n * (get(l1.cos, j) * get(l2.sin, j) - get(l1.sin, j) * get(l2.cos, j));
  }
  return s;
}

Complex loop_cocycle(const TrigLoop& l1, const TrigLoop& l2, int k, Complex t2, int n1) {
  if (std::abs(std::abs(t2) - 1.0) > 1e-12) throw std::invalid_argument("loop_cocycle: t2 must be a unit complex number");
  Complex torus = std::pow(t2, k * n1);
  return std::polar(1.0, loop_pairing(l1, l2)) * torus;
}

}  // namespace kkindex
