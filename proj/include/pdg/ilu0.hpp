#pragma once

#include "pdg/krylov.hpp"
#include "pdg/types.hpp"

namespace pdg {

/// Zero-fill incomplete LU factors stored in the sparsity pattern of the
/// source matrix: strictly-lower entries hold L (unit diagonal implicit),
/// diagonal and upper entries hold U.
class Ilu0Factors {
 public:
  /// IKJ-variant factorization restricted to the pattern of m. Throws
  /// FactorizationError for a structural zero on the diagonal or a pivot
  /// with |pivot| < 1e-300.
  static Ilu0Factors factor(const SparseMat& m);

  /// U^{-1} L^{-1} v via forward then backward substitution.
  Vector apply(const Vector& v) const;

  /// Adapter for the solver's preconditioner hook.
  PrecondFn as_precond() const {
    return [*this](const Vector& v) { return apply(v); };
  }

  const SparseMat& combined() const { return combined_; }

 private:
  explicit Ilu0Factors(SparseMat combined)
      : combined_(std::move(combined)) {}

  SparseMat combined_;
};

/// Free-function spelling of Ilu0Factors::factor.
inline Ilu0Factors ilu0_factor(const SparseMat& m) {
  return Ilu0Factors::factor(m);
}

}  // namespace pdg
