#pragma once

#include <optional>
#include <vector>

#include "kkindex/opcore.hpp"

namespace kkindex {

// strict: an image outside the codomain is an error; compressed: it is dropped.
enum class TruncationMode { strict, compressed };

class TruncationOverflow : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Tensor product of labeled bases, optionally restricted by a cap on the
// summed energy of selected factors.
struct TensorSpace {
  BasisPtr basis;
  std::vector<BasisPtr> factors;

  std::size_t factor_count() const { return factors.size(); }
  // Segment of a product label that belongs to one factor.
  Label segment(const Label& product, std::size_t factor) const;
};

struct EnergyCap {
  int cap = -1;                // negative: no cap
  std::vector<bool> counted;   // factors entering the capped sum; empty means all
};

TensorSpace tensor_space(const std::vector<BasisPtr>& factors, const EnergyCap& cap = {});

// Operator acting factorwise: ops[f] acts on factor f (nullptr = identity).
// Koszul signs use the parities of the domain segments to the left.
SparseOperator lift(const TensorSpace& domain, const TensorSpace& codomain,
                    const std::vector<const SparseOperator*>& ops, Complex coefficient = 1.0,
                    TruncationMode mode = TruncationMode::compressed);

inline SparseOperator lift(const TensorSpace& space, const std::vector<const SparseOperator*>& ops,
                           Complex coefficient = 1.0, TruncationMode mode = TruncationMode::compressed) {
  return lift(space, space, ops, coefficient, mode);
}

// Operator on the product acting on a single factor.
SparseOperator lift_single(const TensorSpace& space, std::size_t factor, const SparseOperator& op,
                           TruncationMode mode = TruncationMode::compressed);

// Restriction of an endomorphism to the columns in `keep` (rows unchanged).
SparseOperator restrict_columns(const SparseOperator& a, const std::vector<bool>& keep);

}  // namespace kkindex
