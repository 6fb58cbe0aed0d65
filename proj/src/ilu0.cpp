#include "pdg/ilu0.hpp"

#include <cmath>
#include <vector>

namespace pdg {

namespace {
constexpr double kPivotFloor = 1e-300;
}

Ilu0Factors Ilu0Factors::factor(const SparseMat& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("ilu0 requires a square matrix");
  const Index n = m.rows();

  SparseMat a = m;  // factor in place on a copy of the pattern
  a.makeCompressed();
  const auto* offsets = a.outerIndexPtr();
  const auto* cols = a.innerIndexPtr();
  double* vals = a.valuePtr();

  // Position of the diagonal entry in each row; -1 = structurally missing.
  std::vector<Index> diag_pos(n, -1);
  for (Index i = 0; i < n; ++i) {
    for (Index p = offsets[i]; p < offsets[i + 1]; ++p)
      if (cols[p] == i) {
        diag_pos[i] = p;
        break;
      }
    if (diag_pos[i] < 0)
      throw FactorizationError("row " + std::to_string(i) +
                               " has no diagonal entry; ILU(0) unsupported");
  }

  // marker[j] = p+1 when column j of the current row sits at position p.
  std::vector<Index> marker(n, 0);
  for (Index i = 0; i < n; ++i) {
    for (Index p = offsets[i]; p < offsets[i + 1]; ++p)
      marker[cols[p]] = p + 1;

    for (Index p = offsets[i]; p < offsets[i + 1] && cols[p] < i; ++p) {
      const Index k = cols[p];
      const double pivot = vals[diag_pos[k]];
      if (std::abs(pivot) < kPivotFloor)
        throw FactorizationError("zero or near-zero pivot at row " +
                                 std::to_string(k));
      const double factor = vals[p] / pivot;
      vals[p] = factor;
      // Eliminate with row k, touching only positions present in row i.
      for (Index q = diag_pos[k] + 1; q < offsets[k + 1]; ++q) {
        const Index pos = marker[cols[q]];
        if (pos > 0) vals[pos - 1] -= factor * vals[q];
      }
    }
    if (std::abs(vals[diag_pos[i]]) < kPivotFloor)
      throw FactorizationError("zero or near-zero pivot at row " +
                               std::to_string(i));

    for (Index p = offsets[i]; p < offsets[i + 1]; ++p)
      marker[cols[p]] = 0;
  }
  return Ilu0Factors(std::move(a));
}

Vector Ilu0Factors::apply(const Vector& v) const {
  const Index n = combined_.rows();
  if (v.size() != n)
    throw std::invalid_argument("ilu0 apply: dimension mismatch");
  const auto* offsets = combined_.outerIndexPtr();
  const auto* cols = combined_.innerIndexPtr();
  const double* vals = combined_.valuePtr();

  // Forward solve L z = v with unit diagonal.
  Vector z = v;
  for (Index i = 0; i < n; ++i) {
    double s = z(i);
    for (Index p = offsets[i]; p < offsets[i + 1] && cols[p] < i; ++p)
      s -= vals[p] * z(cols[p]);
    z(i) = s;
  }
  // Backward solve U x = z.
  for (Index i = n - 1; i >= 0; --i) {
    double s = z(i);
    double d = 0.0;
    for (Index p = offsets[i + 1] - 1; p >= offsets[i] && cols[p] >= i; --p) {
      if (cols[p] == i)
        d = vals[p];
      else
        s -= vals[p] * z(cols[p]);
    }
    z(i) = s / d;
  }
  return z;
}

}  // namespace pdg
