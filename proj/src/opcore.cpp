#include "kkindex/opcore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace kkindex {

Basis::Basis(std::vector<FactorLayout> layout, std::vector<Label> labels, std::vector<double> gram,
             std::vector<int> energies)
    : layout_(std::move(layout)) {
  if (gram.size() != labels.size()) throw std::invalid_argument("Basis: gram size mismatch");
  if (energies.empty()) energies.assign(labels.size(), 0);
  if (energies.size() != labels.size()) throw std::invalid_argument("Basis: energy size mismatch");
  std::size_t width = 0;
  for (const auto& f : layout_) width += f.width;
  for (const auto& l : labels)
    if (l.size() != width) throw std::invalid_argument("Basis: label width does not match layout");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  labels_.reserve(labels.size());
  gram_.reserve(labels.size());
  energies_.reserve(labels.size());
  for (std::size_t i : order) {
    if (!labels_.empty() && labels_.back() == labels[i]) throw std::invalid_argument("Basis: duplicate label");
    if (!(gram[i] > 0.0)) throw std::invalid_argument("Basis: Gram weights must be positive");
    labels_.push_back(std::move(labels[i]));
    gram_.push_back(gram[i]);
    energies_.push_back(energies[i]);
  }
}

std::string Basis::kind() const {
  std::string out;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (i) out += "*";
    out += layout_[i].kind;
  }
  return out;
}

std::size_t Basis::find(const Label& l) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), l);
  if (it == labels_.end() || *it != l) return npos;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t Basis::index_of(const Label& l) const {
  std::size_t i = find(l);
  if (i == npos) throw std::out_of_range("Basis: label not present");
  return i;
}

std::size_t Basis::factor_offset(std::size_t factor) const {
  std::size_t off = 0;
  for (std::size_t f = 0; f < factor; ++f) off += layout_[f].width;
  return off;
}

int Basis::parity_before(const Label& l, std::size_t factor) const {
  int p = 0;
  std::size_t off = 0;
  for (std::size_t f = 0; f < factor && f < layout_.size(); ++f) {
    if (layout_[f].fermionic)
      for (std::size_t k = 0; k < layout_[f].width; ++k) p += l[off + k];
    off += layout_[f].width;
  }
  return p & 1;
}

bool Basis::same_as(const Basis& other) const {
  if (this == &other) return true;
  if (labels_ != other.labels_ || gram_ != other.gram_) return false;
  if (layout_.size() != other.layout_.size()) return false;
  for (std::size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].kind != other.layout_[i].kind || layout_[i].width != other.layout_[i].width) return false;
  return true;
}

bool same_basis(const BasisPtr& a, const BasisPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->same_as(*b);
}

void require_same_basis(const BasisPtr& a, const BasisPtr& b, const char* where) {
  if (!same_basis(a, b)) throw BasisMismatch(std::string(where) + ": basis mismatch");
}

// ---------------------------------------------------------------- Vector

Vector::Vector(BasisPtr basis) : basis_(std::move(basis)), coeffs_(static_cast<Eigen::Index>(basis_->size())) {}

Vector::Vector(BasisPtr basis, const CVector& dense) : Vector(std::move(basis)) {
  if (static_cast<std::size_t>(dense.size()) != basis_->size()) throw BasisMismatch("Vector: size mismatch");
  coeffs_ = dense.sparseView();
}

Vector Vector::unit(BasisPtr basis, const Label& label, Complex value) {
  Vector v(basis);
  v.set(basis->index_of(label), value);
  return v;
}

void Vector::set(std::size_t i, Complex value) {
  if (i >= basis_->size()) throw std::out_of_range("Vector: index out of range");
  coeffs_.coeffRef(static_cast<Eigen::Index>(i)) = value;
}

double Vector::norm() const { return std::sqrt(std::max(0.0, inner_product(*this, *this).real())); }

Vector Vector::operator+(const Vector& other) const {
  require_same_basis(basis_, other.basis_, "Vector::operator+");
  Vector out(basis_);
  out.coeffs_ = coeffs_ + other.coeffs_;
  return out;
}

Vector Vector::operator-(const Vector& other) const {
  require_same_basis(basis_, other.basis_, "Vector::operator-");
  Vector out(basis_);
  out.coeffs_ = coeffs_ - other.coeffs_;
  return out;
}

Vector Vector::operator*(Complex s) const {
  Vector out(basis_);
  out.coeffs_ = coeffs_ * s;
  return out;
}

Complex inner_product(const Vector& v, const Vector& w) {
  require_same_basis(v.basis(), w.basis(), "inner_product");
  Complex sum = 0.0;
  const auto& g = v.basis()->gram();
  for (Eigen::SparseVector<Complex>::InnerIterator it(v.coefficients()); it; ++it) {
    Complex wi = w.coefficients().coeff(it.index());
    if (wi != Complex(0.0)) sum += g[static_cast<std::size_t>(it.index())] * std::conj(it.value()) * wi;
  }
  return sum;
}

// ---------------------------------------------------------------- SparseOperator

SparseOperator::SparseOperator(BasisPtr domain, BasisPtr codomain, SpMatrix matrix, Grade grade)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), matrix_(std::move(matrix)), grade_(grade) {
  if (static_cast<std::size_t>(matrix_.rows()) != codomain_->size() ||
      static_cast<std::size_t>(matrix_.cols()) != domain_->size())
    throw BasisMismatch("SparseOperator: matrix shape does not match bases");
  matrix_.makeCompressed();
}

SparseOperator SparseOperator::from_entries(BasisPtr domain, BasisPtr codomain,
                                            const std::vector<Entry>& entries, Grade grade) {
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row >= codomain->size() || e.col >= domain->size())
      throw std::out_of_range("SparseOperator: entry outside basis bounds");
    trips.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  SpMatrix m(static_cast<Eigen::Index>(codomain->size()), static_cast<Eigen::Index>(domain->size()));
  m.setFromTriplets(trips.begin(), trips.end());
  m.prune(Complex(0.0), 0.0);
  return SparseOperator(std::move(domain), std::move(codomain), std::move(m), grade);
}

SparseOperator SparseOperator::identity(BasisPtr basis) {
  SpMatrix m(static_cast<Eigen::Index>(basis->size()), static_cast<Eigen::Index>(basis->size()));
  m.setIdentity();
  return SparseOperator(basis, basis, std::move(m), Grade::even);
}

SparseOperator SparseOperator::zero(BasisPtr domain, BasisPtr codomain, Grade grade) {
  SpMatrix m(static_cast<Eigen::Index>(codomain->size()), static_cast<Eigen::Index>(domain->size()));
  return SparseOperator(std::move(domain), std::move(codomain), std::move(m), grade);
}

SparseOperator SparseOperator::diagonal(BasisPtr basis, const std::vector<Complex>& values) {
  if (values.size() != basis->size()) throw BasisMismatch("diagonal: size mismatch");
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] != Complex(0.0)) entries.push_back({i, i, values[i]});
  return from_entries(basis, basis, entries, Grade::even);
}

Complex SparseOperator::coeff(std::size_t row, std::size_t col) const {
  return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

std::vector<SparseOperator::Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(matrix_, k); it; ++it)
      out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
  std::sort(out.begin(), out.end(),
            [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  return out;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(matrix_, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

Vector SparseOperator::apply(const Vector& v) const {
  require_same_basis(domain_, v.basis(), "SparseOperator::apply");
  CVector out = matrix_ * v.dense();
  return Vector(codomain_, out);
}

SparseOperator SparseOperator::operator+(const SparseOperator& other) const {
  require_same_basis(domain_, other.domain_, "operator+ (domain)");
  require_same_basis(codomain_, other.codomain_, "operator+ (codomain)");
  Grade g = grade_;
  if (other.grade_ != grade_) {
    // A zero summand carries no grade information.
    if (matrix_.nonZeros() == 0) g = other.grade_;
    else if (other.matrix_.nonZeros() != 0) throw std::invalid_argument("operator+: mixed grades");
  }
  SpMatrix m = matrix_ + other.matrix_;
  return SparseOperator(domain_, codomain_, std::move(m), g);
}

SparseOperator SparseOperator::operator-(const SparseOperator& other) const { return *this + other.scaled(-1.0); }

SparseOperator SparseOperator::operator*(const SparseOperator& other) const {
  require_same_basis(domain_, other.codomain_, "operator* (composition)");
  SpMatrix m = matrix_ * other.matrix_;
  return SparseOperator(other.domain_, codomain_, std::move(m), grade_ + other.grade_);
}

SparseOperator SparseOperator::scaled(Complex s) const {
  SpMatrix m = matrix_ * s;
  return SparseOperator(domain_, codomain_, std::move(m), grade_);
}

SparseOperator operator*(Complex s, const SparseOperator& a) { return a.scaled(s); }

SparseOperator SparseOperator::pruned(double tol) const {
  SpMatrix m = matrix_;
  m.prune([tol](const Eigen::Index&, const Eigen::Index&, const Complex& v) { return std::abs(v) > tol; });
  return SparseOperator(domain_, codomain_, std::move(m), grade_);
}

SparseOperator SparseOperator::with_grade(Grade g) const { return SparseOperator(domain_, codomain_, matrix_, g); }

SpMatrix SparseOperator::orthonormal_matrix() const {
  SpMatrix m = matrix_;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= std::sqrt(codomain_->gram(static_cast<std::size_t>(it.row())) /
                                 domain_->gram(static_cast<std::size_t>(it.col())));
  return m;
}

void SparseOperator::write_triplets(std::ostream& out) const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << rows() << ' ' << cols() << ' ' << parity(grade_) << '\n';
  for (const auto& e : entries()) os << e.row << ' ' << e.col << ' ' << e.value.real() << ' ' << e.value.imag() << '\n';
  out << os.str();
}

// ---------------------------------------------------------------- algebra

SparseOperator graded_commutator(const SparseOperator& a, const SparseOperator& b) {
  if (!same_basis(a.domain(), b.codomain()) || !same_basis(b.domain(), a.codomain()))
    throw BasisMismatch("graded_commutator: shape mismatch");
  double sign = (parity(a.grade()) == 1 && parity(b.grade()) == 1) ? -1.0 : 1.0;
  SparseOperator ab = a * b;
  SparseOperator ba = b * a;
  SpMatrix m = ab.matrix() - sign * ba.matrix();
  return SparseOperator(ab.domain(), ab.codomain(), std::move(m), ab.grade());
}

SparseOperator adjoint(const SparseOperator& a) {
  SpMatrix m = a.matrix().adjoint();
  // m(j, i) = conj(A(i, j)) * g_cod(i) / g_dom(j)
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= a.codomain()->gram(static_cast<std::size_t>(it.col())) /
                       a.domain()->gram(static_cast<std::size_t>(it.row()));
  return SparseOperator(a.codomain(), a.domain(), std::move(m), a.grade());
}

double self_adjoint_defect(const SparseOperator& a) {
  if (!a.is_endomorphism()) throw BasisMismatch("self_adjoint_defect: domain differs from codomain");
  SpMatrix m = a.orthonormal_matrix();
  SpMatrix d = m - SpMatrix(m.adjoint());
  double out = 0.0;
  for (Eigen::Index k = 0; k < d.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(d, k); it; ++it) out = std::max(out, std::abs(it.value()));
  return out;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t root(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) {
    a = root(a);
    b = root(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<SpectralBlock> spectral_blocks(const SparseOperator& a, double tol) {
  if (!a.is_endomorphism()) throw BasisMismatch("spectrum: domain differs from codomain");
  SpMatrix m = a.orthonormal_matrix();
  double scale = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  double defect = self_adjoint_defect(a);
  if (defect > tol * std::max(1.0, scale))
    throw NotSelfAdjoint("spectrum: operator is not self-adjoint (asymmetry " + std::to_string(defect) + ")", defect);

  std::size_t n = a.rows();
  DisjointSets sets(n);
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(m, k); it; ++it)
      sets.join(static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()));

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[sets.root(i)].push_back(i);

  std::vector<SpectralBlock> blocks;
  blocks.reserve(groups.size());
  for (auto& [root, idx] : groups) {
    SpectralBlock blk;
    blk.indices = idx;
    std::size_t d = idx.size();
    CMatrix dense = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::map<std::size_t, std::size_t> local;
    for (std::size_t i = 0; i < d; ++i) local[idx[i]] = i;
    for (std::size_t j = 0; j < d; ++j)
      for (SpMatrix::InnerIterator it(m, static_cast<Eigen::Index>(idx[j])); it; ++it)
        dense(static_cast<Eigen::Index>(local.at(static_cast<std::size_t>(it.row()))),
              static_cast<Eigen::Index>(j)) = it.value();
    // Symmetrize away rounding-level asymmetry before the Hermitian solve.
    CMatrix herm = 0.5 * (dense + dense.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm);
    if (solver.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver failed");
    blk.values = solver.eigenvalues();
    blk.vectors = solver.eigenvectors();
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

std::vector<double> spectrum(const SparseOperator& a, double tol) {
  std::vector<double> values;
  values.reserve(a.rows());
  for (const auto& blk : spectral_blocks(a, tol))
    for (Eigen::Index i = 0; i < blk.values.size(); ++i) values.push_back(blk.values(i));
  std::sort(values.begin(), values.end());
  return values;
}

std::vector<std::pair<double, std::size_t>> multiplicities(const std::vector<double>& values, double tol) {
  std::vector<std::pair<double, std::size_t>> out;
  for (double v : values) {
    if (!out.empty() && std::abs(v - out.back().first) <= tol * std::max(1.0, std::abs(v)))
      ++out.back().second;
    else
      out.emplace_back(v, 1);
  }
  return out;
}

double operator_norm(const SparseOperator& a) {
  CMatrix m(a.orthonormal_matrix());
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Eigen::VectorXd low_rank_singular_values(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.cols()) throw BasisMismatch("low_rank_singular_values: factor widths differ");
  if (a.cols() == 0) return Eigen::VectorXd();
  // A B^H = Qa Ra Rb^H Qb^H, so the singular values are those of Ra Rb^H.
  Eigen::HouseholderQR<CMatrix> qa(a), qb(b);
  Eigen::Index ka = std::min(a.rows(), a.cols()), kb = std::min(b.rows(), b.cols());
  CMatrix ra = qa.matrixQR().topRows(ka).triangularView<Eigen::Upper>();
  CMatrix rb = qb.matrixQR().topRows(kb).triangularView<Eigen::Upper>();
  CMatrix core = ra * rb.adjoint();
  Eigen::JacobiSVD<CMatrix> svd(core);
  return svd.singularValues();
}

}  // namespace kkindex
