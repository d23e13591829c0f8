#include "kkindex/limitspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/KroneckerProduct>

namespace kkindex {

namespace {

constexpr double pi = std::numbers::pi;

struct Node {
  double x;
  double w;
};

// Composite 20-point Gauss-Legendre rule on [lo, hi] with `panels` panels.
std::vector<Node> gauss_panels(double lo, double hi, int panels) {
  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto& xs = rule::abscissa();
  const auto& ws = rule::weights();
  std::vector<Node> out;
  double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = lo + (p + 0.5) * h, half = 0.5 * h;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out.push_back({mid + half * xs[i], half * ws[i]});
      if (xs[i] != 0.0) out.push_back({mid - half * xs[i], half * ws[i]});
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------- sigma rules

SigmaSequence SigmaSequence::pow2() { return geometric(1.0, 0.5); }

SigmaSequence SigmaSequence::geometric(double scale, double ratio) {
  if (!(scale > 0.0) || !(ratio > 0.0)) throw std::invalid_argument("sigma: geometric parameters must be positive");
  SigmaSequence s;
  s.rule = Rule::geometric;
  s.scale = scale;
  s.ratio = ratio;
  return s;
}

SigmaSequence SigmaSequence::power(double scale, double exponent) {
  if (!(scale > 0.0)) throw std::invalid_argument("sigma: power scale must be positive");
  SigmaSequence s;
  s.rule = Rule::power;
  s.scale = scale;
  s.exponent = exponent;
  return s;
}

SigmaSequence SigmaSequence::list(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("sigma: empty list");
  for (double v : values)
    if (!(v > 0.0)) throw std::invalid_argument("sigma: list entries must be positive");
  SigmaSequence s;
  s.rule = Rule::list;
  s.values = std::move(values);
  return s;
}

SigmaSequence SigmaSequence::parse(const std::string& text) {
  if (text == "pow2") return pow2();
  auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("sigma: unknown rule '" + text + "'");
  std::string head = text.substr(0, colon);
  std::vector<double> nums;
  try {
    for (const auto& part : split(text.substr(colon + 1), ',')) nums.push_back(parse_double(part));
  } catch (const std::exception&) {
    throw std::invalid_argument("sigma: malformed value list in '" + text + "'");
  }
  if (head == "list") return list(nums);
  if (head == "geometric" && nums.size() == 2) return geometric(nums[0], nums[1]);
  if (head == "power" && nums.size() == 2) return power(nums[0], nums[1]);
  throw std::invalid_argument("sigma: unknown rule '" + text + "'");
}

double SigmaSequence::operator()(int k) const {
  if (k < 1) throw std::out_of_range("sigma: modes start at 1");
  switch (rule) {
    case Rule::geometric:
      return scale * std::pow(ratio, k);
    case Rule::power:
      return scale * std::pow(static_cast<double>(k), -exponent);
    case Rule::list:
      if (static_cast<std::size_t>(k) > values.size()) throw std::out_of_range("sigma: list exhausted");
      return values[static_cast<std::size_t>(k - 1)];
  }
  return 0.0;
}

std::string SigmaSequence::describe() const {
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::string out;
  switch (rule) {
    case Rule::geometric:
      if (scale == 1.0 && ratio == 0.5) return "pow2";
      out = "geometric:" + num(scale) + "," + num(ratio);
      break;
    case Rule::power:
      out = "power:" + num(scale) + "," + num(exponent);
      break;
    case Rule::list:
      out = "list:";
      for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + num(values[i]);
      break;
  }
  return out;
}

std::string verdict_name(SigmaVerdict v) {
  switch (v) {
    case SigmaVerdict::convergent: return "convergent";
    case SigmaVerdict::divergent: return "divergent";
    case SigmaVerdict::inconclusive: return "inconclusive";
  }
  return "";
}

SigmaCondition check_sigma_condition(const SigmaSequence& seq, int horizon) {
  SigmaCondition out;
  int K = horizon;
  if (seq.rule == SigmaSequence::Rule::list) K = std::min<int>(K, static_cast<int>(seq.values.size()));
  double s = 0.0;
  for (int k = 1; k <= K; ++k) {
    s += std::sqrt(static_cast<double>(k)) * seq(k);
    out.partial_sums.push_back(s);
  }
  switch (seq.rule) {
    case SigmaSequence::Rule::geometric:
      out.verdict = seq.ratio < 1.0 ? SigmaVerdict::convergent : SigmaVerdict::divergent;
      break;
    case SigmaSequence::Rule::power:
      // sqrt(k) k^-p is summable iff p > 3/2
      out.verdict = seq.exponent > 1.5 ? SigmaVerdict::convergent : SigmaVerdict::divergent;
      break;
    case SigmaSequence::Rule::list:
      out.verdict = SigmaVerdict::inconclusive;
      break;
  }
  return out;
}

double tail_bound(int M, const SigmaSequence& seq) {
  if (M < 0) throw std::invalid_argument("tail_bound: M must be nonnegative");
  if (!seq.has_tail_rule()) throw std::invalid_argument("tail_bound: sequence has no tail rule");
  if (check_sigma_condition(seq, 0).verdict != SigmaVerdict::convergent)
    throw DivergentSequence("tail_bound: sum of sqrt(n) sigma_n diverges");
  auto term = [&](int n) { return 2.0 * std::sqrt(2.0 * n) * seq(n); };
  double sum = 0.0;
  if (seq.rule == SigmaSequence::Rule::geometric) {
    for (int n = M + 1;; ++n) {
      double t = term(n);
      sum += t;
      if (t < 1e-15 && n > M + 2) break;
    }
    return sum;
  }
  // Power rule: direct sum up to a cutoff, then the Euler-Maclaurin tail of
  // c n^-q with q = exponent - 1/2 > 1.
  const int cutoff = std::max(M + 1, 100000);
  for (int n = M + 1; n < cutoff; ++n) sum += term(n);
  double c = 2.0 * std::sqrt(2.0) * seq.scale, q = seq.exponent - 0.5, N = cutoff;
  double integral = c * std::pow(N, 1.0 - q) / (q - 1.0);
  double half = 0.5 * c * std::pow(N, -q);
  double deriv = -q * c * std::pow(N, -q - 1.0) / 12.0;
  return sum + integral + half - deriv;
}

// ------------------------------------------------------------ Hermite modes

std::vector<double> hermite_functions(int n, double x) {
  std::vector<double> psi(static_cast<std::size_t>(std::max(n, 0) + 1));
  psi[0] = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (n >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int k = 1; k < n; ++k)
    psi[static_cast<std::size_t>(k + 1)] = std::sqrt(2.0 / (k + 1)) * x * psi[static_cast<std::size_t>(k)] -
                                           std::sqrt(static_cast<double>(k) / (k + 1)) * psi[static_cast<std::size_t>(k - 1)];
  return psi;
}

BasisPtr hermite_basis(int cut) {
  if (cut < 0) throw std::invalid_argument("hermite_basis: negative cut");
  std::vector<Label> labels;
  std::vector<double> gram;
  std::vector<int> degree;
  for (int a = 0; a <= cut; ++a)
    for (int b = 0; a + b <= cut; ++b) {
      labels.push_back({a, b});
      gram.push_back(1.0);
      degree.push_back(a + b);
    }
  return std::make_shared<const Basis>(std::vector<FactorLayout>{{"hermite", 2, false}}, std::move(labels),
                                       std::move(gram), std::move(degree));
}

namespace {

// Overlaps <psi_a psi_b, chi_sigma> for even a, b with a + b <= cut, using
// x = sigma sin t, y = sigma cos t s on the quarter disk (both integrands even).
std::vector<std::vector<double>> disk_overlaps(double sigma, int cut, int panels) {
  std::size_t n = static_cast<std::size_t>(cut) + 1;
  std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
  auto tnodes = gauss_panels(0.0, 0.5 * pi, panels);
  auto snodes = gauss_panels(0.0, 1.0, panels);
  double norm = 4.0 * sigma * sigma / std::sqrt(pi * sigma * sigma);
  std::vector<double> inner(n);
  for (const auto& t : tnodes) {
    double ct = std::cos(t.x);
    auto px = hermite_functions(cut, sigma * std::sin(t.x));
    std::fill(inner.begin(), inner.end(), 0.0);
    for (const auto& s : snodes) {
      auto py = hermite_functions(cut, sigma * ct * s.x);
      for (std::size_t b = 0; b < n; b += 2) inner[b] += s.w * py[b];
    }
    double wt = t.w * ct * ct * norm;
    for (std::size_t a = 0; a < n; a += 2)
      for (std::size_t b = 0; a + b < n; b += 2) out[a][b] += wt * px[a] * inner[b];
  }
  return out;
}

}  // namespace

double disk_overlap(double sigma, int a, int b) {
  if (a < 0 || b < 0) throw std::invalid_argument("disk_overlap: negative degree");
  if ((a | b) & 1) return 0.0;
  int cut = a + b;
  int panels = std::max(2, cut / 8 + 2);
  return disk_overlaps(sigma, cut, panels)[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

Vector ModeFunction::renormalized() const {
  if (!(norm_sq > 0.0)) throw std::domain_error("ModeFunction: zero vector cannot be renormalized");
  return coeffs * Complex(1.0 / std::sqrt(norm_sq));
}

ModeFunction xi_coeffs(double sigma, int cut, double tol) {
  if (!(sigma > 0.0)) throw std::invalid_argument("xi_coeffs: sigma must be positive");
  if (cut < 0) throw std::invalid_argument("xi_coeffs: negative Hermite cut");
  // Refine the composite rule until two successive panel counts agree.
  int panels = std::max(2, static_cast<int>(std::ceil(cut / 16.0 + 2.0 * sigma)));
  auto prev = disk_overlaps(sigma, cut, panels);
  bool converged = false;
  for (int iter = 0; iter < 8; ++iter) {
    auto next = disk_overlaps(sigma, cut, 2 * panels);
    double diff = 0.0;
    for (std::size_t a = 0; a < next.size(); ++a)
      for (std::size_t b = 0; b < next.size(); ++b) diff = std::max(diff, std::abs(next[a][b] - prev[a][b]));
    panels *= 2;
    prev = std::move(next);
    if (diff <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw QuadratureError("xi_coeffs: disk quadrature did not converge");

  ModeFunction out(hermite_basis(cut));
  out.sigma = sigma;
  out.cut = cut;
  out.is_xi = true;
  out.quadrature_panels = panels;
  const Basis& b = *out.coeffs.basis();
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    int x = b.label(i)[0], y = b.label(i)[1];
    double v = prev[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    if (v == 0.0) continue;
    // Hermite functions are Fourier eigenfunctions with eigenvalue (-i)^degree;
    // only even degrees occur here.
    double phase = ((x + y) / 2) % 2 ? -1.0 : 1.0;
    out.coeffs.set(i, phase * v);
    norm_sq += v * v;
  }
  out.norm_sq = norm_sq;
  out.deficiency = 1.0 - norm_sq;
  return out;
}

// ---------------------------------------------------------- dR_z on Hermite

SparseOperator hermite_derivative(Derivative type, const BasisPtr& domain, const BasisPtr& codomain,
                                  TruncationMode mode) {
  // d/dx = (a_x - a_x^dag) / sqrt(2); dR_z = (d/dx + i d/dy) / sqrt(2).
  const Complex iy = type == Derivative::z ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
  std::vector<SparseOperator::Entry> entries;
  auto push = [&](std::size_t col, int a, int b, Complex v) {
    std::size_t row = codomain->find({a, b});
    if (row == Basis::npos) {
      if (mode == TruncationMode::strict)
        throw TruncationOverflow("hermite_derivative: image leaves the Hermite truncation");
      return;
    }
    entries.push_back({row, col, v});
  };
  for (std::size_t j = 0; j < domain->size(); ++j) {
    int a = domain->label(j)[0], b = domain->label(j)[1];
    if (a > 0) push(j, a - 1, b, 0.5 * std::sqrt(static_cast<double>(a)));
    push(j, a + 1, b, -0.5 * std::sqrt(a + 1.0));
    if (b > 0) push(j, a, b - 1, 0.5 * iy * std::sqrt(static_cast<double>(b)));
    push(j, a, b + 1, -0.5 * iy * std::sqrt(b + 1.0));
  }
  return SparseOperator::from_entries(domain, codomain, entries, Grade::even);
}

SparseOperator hermite_derivative(Derivative type, const BasisPtr& basis) {
  return hermite_derivative(type, basis, basis, TruncationMode::compressed);
}

double momentum_integral(double horizon) {
  // integral_0^T J_2(t)^2 / t dt on unit panels, then the large-t tail
  // J_2(t)^2 / t ~ (1 + sin 2t) / (pi t^2).
  int panels = static_cast<int>(std::ceil(horizon));
  double T = panels;
  double sum = 0.0;
  for (const auto& node : gauss_panels(0.0, T, panels)) {
    double j = std::cyl_bessel_j(2.0, node.x);
    sum += node.w * j * j / node.x;
  }
  sum += 1.0 / (pi * T) + std::cos(2.0 * T) / (2.0 * pi * T * T);
  return sum;
}

XiDerivativeNorm dRz_norm_on_xi(double sigma, int hermite_cut, double tol) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dRz_norm_on_xi: sigma must be positive");
  XiDerivativeNorm out;
  out.sigma = sigma;
  out.closed_form = 0.5 * sigma;

  // Position side: the Fourier transform turns dR_z into multiplication by
  // i (x + i y) / sqrt(2), so the squared norm is the radial moment below.
  auto radial = [sigma](double r) { return 0.5 * r * r / (pi * sigma * sigma) * 2.0 * pi * r; };
  double err = 0.0;
  double moment = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, 0.0, sigma, 15, 1e-12, &err);
  out.position = std::sqrt(moment);

  // Momentum side: Xi(k) = J_1(sigma k) / (sqrt(pi) k), |dR_z Xi|^2 = |Xi'|^2 / 2,
  // giving sigma^2 * integral J_2(t)^2 / t dt.
  static const double momentum = momentum_integral();
  out.momentum = sigma * std::sqrt(momentum);

  if (std::abs(out.position - out.momentum) > tol * std::max(1.0, out.position))
    throw QuadratureError("dRz_norm_on_xi: position and momentum quadratures disagree");

  if (hermite_cut >= 1) {
    ModeFunction xi = xi_coeffs(sigma, hermite_cut);
    // Components of degree < cut only see Xi components of degree <= cut.
    auto lower = hermite_basis(hermite_cut - 1);
    auto d = hermite_derivative(Derivative::z, xi.coeffs.basis(), lower, TruncationMode::compressed);
    out.hermite = d.apply(xi.coeffs).norm();
    out.hermite_cut = hermite_cut;
    out.hermite_deficiency = xi.deficiency;
  }
  return out;
}

// ------------------------------------------------------------- Dirac on L^2

LimitDirac build_D(const TruncationSpec& spec, int active, int hermite_cut) {
  spec.validate();
  if (active < 1 || active > spec.max_mode) throw std::invalid_argument("build_D: active modes outside 1..N_max");
  BasisPtr hermite = hermite_basis(hermite_cut);
  BasisPtr fermion = enumerate_basis(spec, FockKind::fermion);
  std::vector<BasisPtr> factors(static_cast<std::size_t>(active), hermite);
  factors.push_back(fermion);
  TensorSpace space = tensor_space(factors);
  auto dz = hermite_derivative(Derivative::z, hermite);
  auto dzb = hermite_derivative(Derivative::zbar, hermite);
  SparseOperator total = SparseOperator::zero(space.basis, space.basis, Grade::odd);
  const std::size_t f = static_cast<std::size_t>(active);
  for (int n = 1; n <= active; ++n) {
    auto g_anti = clifford(n, CliffordType::antiholo, fermion);
    auto g_holo = clifford(n, CliffordType::holo, fermion);
    std::vector<const SparseOperator*> t1(f + 1, nullptr), t2(f + 1, nullptr);
    t1[static_cast<std::size_t>(n - 1)] = &dz;
    t1[f] = &g_anti;
    t2[static_cast<std::size_t>(n - 1)] = &dzb;
    t2[f] = &g_holo;
    double c = std::sqrt(static_cast<double>(n));
    total = total + lift(space, t1, c) + lift(space, t2, c);
  }
  return LimitDirac{space, hermite, fermion, active, total.with_grade(Grade::odd)};
}

double frozen_tail_norm(int M, const SigmaSequence& seq) {
  if (M < 0) throw std::invalid_argument("frozen_tail_norm: M must be nonnegative");
  // The terms for different n land on orthogonal fermion states
  // gamma(zbar_n) 1_f = sqrt(2) zbar_n, so their squared norms add.
  // The momentum-side norm is sigma times a sigma-independent integral.
  const double unit = dRz_norm_on_xi(1.0, 0).momentum;
  auto term = [&](int n) {
    double q = unit * seq(n);
    return 2.0 * n * q * q;
  };
  double sum = 0.0;
  switch (seq.rule) {
    case SigmaSequence::Rule::list:
      for (int n = M + 1; n <= static_cast<int>(seq.values.size()); ++n) sum += term(n);
      break;
    case SigmaSequence::Rule::geometric:
      if (seq.ratio >= 1.0) throw DivergentSequence("frozen_tail_norm: sigma does not decay");
      for (int n = M + 1;; ++n) {
        double t = term(n);
        sum += t;
        if (t <= 1e-18 * sum) break;
      }
      break;
    case SigmaSequence::Rule::power: {
      // 2 n c^2 sigma_n^2 ~ n^(1 - 2p): finite iff p > 1.
      if (seq.exponent <= 1.0) throw DivergentSequence("frozen_tail_norm: tail diverges");
      const int cutoff = std::max(M + 1, 100000);
      for (int n = M + 1; n < cutoff; ++n) sum += term(n);
      double q = 2.0 * seq.exponent - 1.0;
      sum += term(cutoff) * cutoff / (q - 1.0) + 0.5 * term(cutoff);
      break;
    }
  }
  return std::sqrt(sum);
}

std::vector<TailRow> tail_table(int M_lo, int M_hi, const SigmaSequence& seq) {
  std::vector<TailRow> out;
  for (int M = M_lo; M <= M_hi; ++M) out.push_back({M, tail_bound(M, seq), frozen_tail_norm(M, seq)});
  return out;
}

// ------------------------------------------------------ crossed embedding

SparseOperator rank_one_projection(const Vector& v) {
  const BasisPtr& b = v.basis();
  Complex nn = inner_product(v, v);
  if (!(nn.real() > 0.0)) throw std::domain_error("rank_one_projection: zero vector");
  std::vector<SparseOperator::Entry> entries;
  const auto& c = v.coefficients();
  for (Eigen::SparseVector<Complex>::InnerIterator i(c); i; ++i)
    for (Eigen::SparseVector<Complex>::InnerIterator j(c); j; ++j) {
      std::size_t col = static_cast<std::size_t>(j.index());
      entries.push_back({static_cast<std::size_t>(i.index()), col,
                         i.value() * std::conj(j.value()) * b->gram(col) / nn.real()});
    }
  return SparseOperator::from_entries(b, b, entries, Grade::even);
}

CrossedEmbedding embed_crossed(const SparseOperator& k, const ModeFunction& xi) {
  if (!k.is_endomorphism()) throw BasisMismatch("embed_crossed: operator must act on one prefix space");
  SparseOperator p = rank_one_projection(xi.renormalized());
  TensorSpace space = tensor_space({k.domain(), xi.coeffs.basis()});
  SpMatrix m = Eigen::kroneckerProduct(k.matrix(), p.matrix()).eval();
  return CrossedEmbedding{space, SparseOperator(space.basis, space.basis, m, k.grade())};
}

}  // namespace kkindex
