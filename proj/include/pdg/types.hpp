#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace pdg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Compressed sparse row storage. Kept compressed and column-sorted by every
/// constructor in this library; row_offsets/col_indices/values are exposed
/// through Eigen's outer/inner/value pointers.
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Input that violates a file-format contract (Matrix Market, config, ...).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Non-finite values appeared during an iteration (overflow or breakdown of
/// the recurrence). The solve cannot continue.
class DivergenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incomplete factorization failed (structural zero or tiny pivot).
class FactorizationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pdg
