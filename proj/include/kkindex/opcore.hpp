#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace kkindex {

using Complex = std::complex<double>;
using Label = std::vector<int>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using SpMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr double default_tolerance = 1e-10;

// Raised by any operation whose inputs live on different bases or have
// incompatible shapes.
class BasisMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSelfAdjoint : public std::domain_error {
 public:
  NotSelfAdjoint(const std::string& what, double asymmetry)
      : std::domain_error(what), asymmetry_(asymmetry) {}
  double asymmetry() const { return asymmetry_; }

 private:
  double asymmetry_;
};

enum class Grade { even = 0, odd = 1 };

inline int parity(Grade g) { return static_cast<int>(g); }
inline Grade grade_of(int p) { return (p & 1) ? Grade::odd : Grade::even; }
inline Grade operator+(Grade a, Grade b) { return grade_of(parity(a) + parity(b)); }

// One tensor factor of a basis: a kind name and the width of its label segment.
struct FactorLayout {
  std::string kind;
  std::size_t width = 0;
  bool fermionic = false;  // labels are 0/1 occupations contributing to parity
};

// Ordered labeled basis with a positive diagonal Gram matrix. Labels are
// fixed-width integer tuples kept in lexicographic order; product bases
// concatenate the factor segments.
class Basis {
 public:
  Basis(std::vector<FactorLayout> layout, std::vector<Label> labels, std::vector<double> gram,
        std::vector<int> energies = {});

  std::size_t size() const { return labels_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  const Label& label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& gram() const { return gram_; }
  double gram(std::size_t i) const { return gram_[i]; }
  const std::vector<int>& energies() const { return energies_; }
  int energy(std::size_t i) const { return energies_[i]; }
  const std::vector<FactorLayout>& layout() const { return layout_; }
  std::string kind() const;

  // Index of a label, or npos when absent.
  std::size_t find(const Label& l) const;
  std::size_t index_of(const Label& l) const;  // throws when absent
  bool contains(const Label& l) const { return find(l) != npos; }

  // Fermionic parity of a label restricted to factors [0, factor).
  int parity_before(const Label& l, std::size_t factor) const;
  int parity(const Label& l) const { return parity_before(l, layout_.size()); }
  std::size_t factor_offset(std::size_t factor) const;

  bool same_as(const Basis& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<FactorLayout> layout_;
  std::vector<Label> labels_;
  std::vector<double> gram_;
  std::vector<int> energies_;
};

using BasisPtr = std::shared_ptr<const Basis>;

bool same_basis(const BasisPtr& a, const BasisPtr& b);
void require_same_basis(const BasisPtr& a, const BasisPtr& b, const char* where);

class Vector {
 public:
  explicit Vector(BasisPtr basis);
  Vector(BasisPtr basis, const CVector& dense);

  static Vector unit(BasisPtr basis, const Label& label, Complex value = 1.0);

  const BasisPtr& basis() const { return basis_; }
  const Eigen::SparseVector<Complex>& coefficients() const { return coeffs_; }
  CVector dense() const { return CVector(coeffs_); }
  Complex coeff(std::size_t i) const { return coeffs_.coeff(static_cast<Eigen::Index>(i)); }
  void set(std::size_t i, Complex value);

  double norm() const;
  Vector operator+(const Vector& other) const;
  Vector operator-(const Vector& other) const;
  Vector operator*(Complex s) const;

 private:
  BasisPtr basis_;
  Eigen::SparseVector<Complex> coeffs_;
};

Complex inner_product(const Vector& v, const Vector& w);

// Sparse operator between labeled bases; entry (i, j) is the coefficient of
// codomain label i in the image of domain label j.
class SparseOperator {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    Complex value;
  };

  SparseOperator(BasisPtr domain, BasisPtr codomain, SpMatrix matrix, Grade grade);

  static SparseOperator from_entries(BasisPtr domain, BasisPtr codomain,
                                     const std::vector<Entry>& entries, Grade grade);
  static SparseOperator identity(BasisPtr basis);
  static SparseOperator zero(BasisPtr domain, BasisPtr codomain, Grade grade = Grade::even);
  static SparseOperator diagonal(BasisPtr basis, const std::vector<Complex>& values);

  const BasisPtr& domain() const { return domain_; }
  const BasisPtr& codomain() const { return codomain_; }
  const SpMatrix& matrix() const { return matrix_; }
  Grade grade() const { return grade_; }
  std::size_t rows() const { return codomain_->size(); }
  std::size_t cols() const { return domain_->size(); }
  bool is_endomorphism() const { return same_basis(domain_, codomain_); }

  Complex coeff(std::size_t row, std::size_t col) const;
  std::vector<Entry> entries() const;  // row-major order
  std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
  double max_abs() const;
  CMatrix dense() const { return CMatrix(matrix_); }

  Vector apply(const Vector& v) const;

  SparseOperator operator+(const SparseOperator& other) const;
  SparseOperator operator-(const SparseOperator& other) const;
  SparseOperator operator*(const SparseOperator& other) const;  // composition
  SparseOperator scaled(Complex s) const;
  SparseOperator pruned(double tol = 0.0) const;
  SparseOperator with_grade(Grade g) const;

  // Matrix in Gram-orthonormal coordinates: G_cod^{1/2} A G_dom^{-1/2}.
  SpMatrix orthonormal_matrix() const;

  void write_triplets(std::ostream& out) const;

 private:
  BasisPtr domain_;
  BasisPtr codomain_;
  SpMatrix matrix_;
  Grade grade_;
};

SparseOperator operator*(Complex s, const SparseOperator& a);

SparseOperator graded_commutator(const SparseOperator& a, const SparseOperator& b);
SparseOperator adjoint(const SparseOperator& a);

// Largest |A - A*| entry in orthonormal coordinates.
double self_adjoint_defect(const SparseOperator& a);

struct SpectralBlock {
  std::vector<std::size_t> indices;  // basis indices of the block
  Eigen::VectorXd values;
  CMatrix vectors;                   // orthonormal-coordinate eigenvectors
};

// Eigen-decomposition of a self-adjoint operator, split into the connected
// components of its sparsity graph.
std::vector<SpectralBlock> spectral_blocks(const SparseOperator& a, double tol = default_tolerance);

std::vector<double> spectrum(const SparseOperator& a, double tol = default_tolerance);

// Group a sorted spectrum into (value, multiplicity) pairs.
std::vector<std::pair<double, std::size_t>> multiplicities(const std::vector<double>& values,
                                                           double tol = 1e-8);

// Operator norm via singular values of the orthonormal-coordinate matrix.
double operator_norm(const SparseOperator& a);

// Largest singular value of the dense matrix A B^H computed through thin
// factors, and the full list of its singular values.
Eigen::VectorXd low_rank_singular_values(const CMatrix& a, const CMatrix& b);

}  // namespace kkindex
