#pragma once

#include <string>
#include <vector>

#include "kkindex/fock.hpp"
#include "kkindex/opcore.hpp"
#include "kkindex/tensor.hpp"

namespace kkindex {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergentSequence : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Radii of the disk indicators, one per mode (k = 1, 2, ...).
//   pow2:        sigma_k = 2^-k
//   geometric:   sigma_k = scale * ratio^k
//   power:       sigma_k = scale * k^-exponent
//   list:        explicit finite list (no tail rule)
struct SigmaSequence {
  enum class Rule { geometric, power, list };
  Rule rule = Rule::geometric;
  double scale = 1.0;
  double ratio = 0.5;
  double exponent = 1.0;
  std::vector<double> values;

  static SigmaSequence pow2();
  static SigmaSequence geometric(double scale, double ratio);
  static SigmaSequence power(double scale, double exponent);
  static SigmaSequence list(std::vector<double> values);
  // "pow2", "geometric:s,r", "power:s,p" or "list:a,b,...".
  static SigmaSequence parse(const std::string& text);

  double operator()(int k) const;
  bool has_tail_rule() const { return rule != Rule::list; }
  std::size_t size_hint() const { return rule == Rule::list ? values.size() : 0; }
  std::string describe() const;
};

enum class SigmaVerdict { convergent, divergent, inconclusive };
std::string verdict_name(SigmaVerdict v);

struct SigmaCondition {
  std::vector<double> partial_sums;  // sum_{k<=K} sqrt(k) sigma_k for K = 1..horizon
  SigmaVerdict verdict = SigmaVerdict::inconclusive;
};

SigmaCondition check_sigma_condition(const SigmaSequence& seq, int horizon);

// sum_{n>M} 2 sqrt(2n) sigma_n.
double tail_bound(int M, const SigmaSequence& seq);

// 2-D Hermite functions psi_a(x) psi_b(y) with a + b <= cut; labels (a, b).
BasisPtr hermite_basis(int cut);

// Values psi_0(x), ..., psi_n(x) of the normalized Hermite functions.
std::vector<double> hermite_functions(int n, double x);

struct ModeFunction {
  double sigma = 0.0;
  int cut = 0;
  bool is_xi = false;
  Vector coeffs;
  double norm_sq = 0.0;      // sum |c|^2 over the truncation
  double deficiency = 0.0;   // 1 - norm_sq for Xi
  int quadrature_panels = 0;

  ModeFunction(BasisPtr basis) : coeffs(std::move(basis)) {}
  Vector renormalized() const;
};

// Hermite coefficients of the Fourier transform of the normalized disk
// indicator of radius sigma.
ModeFunction xi_coeffs(double sigma, int cut, double tol = 1e-13);

// Overlap of the disk indicator with one Hermite function; exposed for tests.
double disk_overlap(double sigma, int a, int b);

enum class Derivative { z, zbar };

// (d/dx +- i d/dy) / sqrt(2) on the Hermite basis, compressed to the cut.
SparseOperator hermite_derivative(Derivative type, const BasisPtr& basis);
// Same operator from one cut to another.
SparseOperator hermite_derivative(Derivative type, const BasisPtr& domain, const BasisPtr& codomain,
                                  TruncationMode mode = TruncationMode::strict);

struct XiDerivativeNorm {
  double sigma = 0.0;
  double closed_form = 0.0;   // sigma / 2
  double position = 0.0;      // radial quadrature of |x|^2 chi^2 / 2
  double momentum = 0.0;      // quadrature of |grad Xi|^2 / 2 via Bessel functions
  double hermite = 0.0;       // Hermite-matrix application at `hermite_cut`
  int hermite_cut = 0;
  double hermite_deficiency = 0.0;  // Xi norm deficiency at that cut
};

// Computes the norm of dR_z Xi_sigma by independent methods; throws
// QuadratureError when the position and momentum values disagree beyond tol.
XiDerivativeNorm dRz_norm_on_xi(double sigma, int hermite_cut = 40, double tol = 1e-9);

// sigma^2 * integral_0^inf J_2(t)^2 / t dt evaluated numerically; exposed for tests.
double momentum_integral(double horizon = 4096.0);

// Active-mode Dirac operator sum_{n<=M} sqrt(n) (dR_{z_n} (x) gamma(zbar_n) + dR_{zbar_n} (x) gamma(z_n))
// on (Hermite mode 1..M) (x) fermion.
struct LimitDirac {
  TensorSpace space;
  BasisPtr hermite;
  BasisPtr fermion;
  int active = 0;
  SparseOperator op;
};

LimitDirac build_D(const TruncationSpec& spec, int active, int hermite_cut);

// Norm of the frozen-tail Dirac operator on Xi (x) 1_f for modes n > M,
// from per-mode derivative norms: sqrt(sum_{n>M} 2 n ||dR_z Xi_n||^2).
double frozen_tail_norm(int M, const SigmaSequence& seq);

struct TailRow {
  int M = 0;
  double bound = 0.0;
  double measured = 0.0;
};

std::vector<TailRow> tail_table(int M_lo, int M_hi, const SigmaSequence& seq);

// k (x) P_Xi on the prefix extended by one Hermite mode.
struct CrossedEmbedding {
  TensorSpace space;
  SparseOperator op;
};

CrossedEmbedding embed_crossed(const SparseOperator& k, const ModeFunction& xi);

// Rank-one projection onto a unit vector.
SparseOperator rank_one_projection(const Vector& v);

}  // namespace kkindex
