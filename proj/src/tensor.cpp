#include "kkindex/tensor.hpp"

#include <numeric>

namespace kkindex {

Label TensorSpace::segment(const Label& product, std::size_t factor) const {
  auto width = [&](std::size_t f) {
    std::size_t w = 0;
    for (const auto& l : factors[f]->layout()) w += l.width;
    return w;
  };
  std::size_t off = 0;
  for (std::size_t f = 0; f < factor; ++f) off += width(f);
  std::size_t w = width(factor);
  return Label(product.begin() + static_cast<std::ptrdiff_t>(off),
               product.begin() + static_cast<std::ptrdiff_t>(off + w));
}

TensorSpace tensor_space(const std::vector<BasisPtr>& factors, const EnergyCap& cap) {
  if (factors.empty()) throw std::invalid_argument("tensor_space: no factors");
  std::vector<bool> counted = cap.counted;
  if (counted.empty()) counted.assign(factors.size(), true);
  if (counted.size() != factors.size()) throw std::invalid_argument("tensor_space: counted flags mismatch");

  std::vector<FactorLayout> layout;
  for (const auto& f : factors)
    for (const auto& l : f->layout()) layout.push_back(l);

  std::vector<Label> labels;
  std::vector<double> gram;
  std::vector<int> energy;
  Label current;
  // Depth-first enumeration; the factor label lists are sorted, so the
  // product labels come out in lexicographic order.
  auto recurse = [&](auto&& self, std::size_t f, double g, int e, int capped) -> void {
    if (f == factors.size()) {
      labels.push_back(current);
      gram.push_back(g);
      energy.push_back(e);
      return;
    }
    const Basis& b = *factors[f];
    for (std::size_t i = 0; i < b.size(); ++i) {
      int fe = b.energy(i);
      int nc = capped + (counted[f] ? fe : 0);
      if (cap.cap >= 0 && nc > cap.cap) continue;
      std::size_t mark = current.size();
      current.insert(current.end(), b.label(i).begin(), b.label(i).end());
      self(self, f + 1, g * b.gram(i), e + fe, nc);
      current.resize(mark);
    }
  };
  recurse(recurse, 0, 1.0, 0, 0);
  auto basis = std::make_shared<const Basis>(std::move(layout), std::move(labels), std::move(gram), std::move(energy));
  return TensorSpace{basis, factors};
}

SparseOperator lift(const TensorSpace& domain, const TensorSpace& codomain,
                    const std::vector<const SparseOperator*>& ops, Complex coefficient, TruncationMode mode) {
  std::size_t nf = domain.factor_count();
  if (ops.size() != nf || codomain.factor_count() != nf) throw BasisMismatch("lift: factor count mismatch");
  Grade total = Grade::even;
  for (std::size_t f = 0; f < nf; ++f) {
    if (!ops[f]) {
      require_same_basis(domain.factors[f], codomain.factors[f], "lift (identity factor)");
      continue;
    }
    require_same_basis(ops[f]->domain(), domain.factors[f], "lift (operator domain)");
    require_same_basis(ops[f]->codomain(), codomain.factors[f], "lift (operator codomain)");
    total = total + ops[f]->grade();
  }

  // Column lists of every factor operator, for fast access.
  std::vector<std::vector<std::vector<std::pair<std::size_t, Complex>>>> columns(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    if (!ops[f]) continue;
    const SpMatrix& m = ops[f]->matrix();
    columns[f].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
      for (SpMatrix::InnerIterator it(m, k); it; ++it)
        columns[f][static_cast<std::size_t>(k)].emplace_back(static_cast<std::size_t>(it.row()), it.value());
  }
  std::vector<std::size_t> widths(nf), offsets(nf);
  std::size_t off = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    offsets[f] = off;
    std::size_t w = 0;
    for (const auto& l : domain.factors[f]->layout()) w += l.width;
    widths[f] = w;
    off += w;
  }

  std::vector<SparseOperator::Entry> entries;
  const Basis& dom = *domain.basis;
  const Basis& cod = *codomain.basis;
  Label work;
  for (std::size_t c = 0; c < dom.size(); ++c) {
    const Label& lab = dom.label(c);
    // Koszul sign from the domain parities left of each odd factor operator.
    int sign_exp = 0;
    int left_parity = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (ops[f] && ops[f]->grade() == Grade::odd) sign_exp += left_parity;
      const auto& lay = domain.factors[f]->layout();
      std::size_t o = offsets[f];
      for (const auto& l : lay) {
        if (l.fermionic)
          for (std::size_t k = 0; k < l.width; ++k) left_parity += lab[o + k];
        o += l.width;
      }
    }
    Complex base = (sign_exp & 1) ? -coefficient : coefficient;
    work = lab;
    auto recurse = [&](auto&& self, std::size_t f, Complex coef) -> void {
      if (f == nf) {
        std::size_t r = cod.find(work);
        if (r == Basis::npos) {
          if (mode == TruncationMode::strict) throw TruncationOverflow("lift: image leaves the truncated codomain");
          return;
        }
        entries.push_back({r, c, coef});
        return;
      }
      if (!ops[f]) {
        self(self, f + 1, coef);
        return;
      }
      Label seg(lab.begin() + static_cast<std::ptrdiff_t>(offsets[f]),
                lab.begin() + static_cast<std::ptrdiff_t>(offsets[f] + widths[f]));
      std::size_t j = domain.factors[f]->index_of(seg);
      for (const auto& [row, val] : columns[f][j]) {
        const Label& out = codomain.factors[f]->label(row);
        std::copy(out.begin(), out.end(), work.begin() + static_cast<std::ptrdiff_t>(offsets[f]));
        self(self, f + 1, coef * val);
      }
      std::copy(seg.begin(), seg.end(), work.begin() + static_cast<std::ptrdiff_t>(offsets[f]));
    };
    recurse(recurse, 0, base);
  }
  return SparseOperator::from_entries(domain.basis, codomain.basis, entries, total);
}

SparseOperator lift_single(const TensorSpace& space, std::size_t factor, const SparseOperator& op, TruncationMode mode) {
  std::vector<const SparseOperator*> ops(space.factor_count(), nullptr);
  ops.at(factor) = &op;
  return lift(space, ops, 1.0, mode);
}

SparseOperator restrict_columns(const SparseOperator& a, const std::vector<bool>& keep) {
  if (keep.size() != a.cols()) throw BasisMismatch("restrict_columns: mask size mismatch");
  std::vector<SparseOperator::Entry> entries;
  for (const auto& e : a.entries())
    if (keep[e.col]) entries.push_back(e);
  return SparseOperator::from_entries(a.domain(), a.codomain(), entries, a.grade());
}

}  // namespace kkindex
