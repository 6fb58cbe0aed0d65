#pragma once

#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

#include "pdg/types.hpp"

namespace pdg {

/// One explicit entry of a coordinate-format matrix, 0-based.
struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Builds an n x n CSR matrix from coordinate entries. Duplicate positions
/// are summed; rows end up sorted by column. Throws std::out_of_range for
/// indices outside [0, n).
SparseMat from_triplets(Index n, const std::vector<Triplet>& entries);

/// Rectangular variant used by the Matrix Market reader.
SparseMat from_triplets(Index n_rows, Index n_cols,
                        const std::vector<Triplet>& entries);

/// Reads a Matrix Market coordinate file (real or integer field, general or
/// symmetric symmetry). Symmetric storage is expanded to full general
/// storage, 1-based indices become 0-based, duplicates are summed. Pattern,
/// complex and array inputs are rejected with a ParseError carrying the
/// offending line number.
SparseMat parse_matrix_market(std::istream& in);
SparseMat parse_matrix_market(const std::string& text);
SparseMat load_matrix_market(const std::string& path);

/// Writes coordinate/real/general Matrix Market text with 1-based indices.
/// Values are printed with shortest round-trip precision, so
/// parse(write(m)) reproduces m bitwise.
void write_matrix_market(const SparseMat& m, std::ostream& out);
std::string write_matrix_market(const SparseMat& m);
void save_matrix_market(const SparseMat& m, const std::string& path);

/// Sparse row-wise product m * v. Throws std::invalid_argument on dimension
/// mismatch (checked in release builds too, unlike operator*).
Vector matvec(const SparseMat& m, const Vector& v);

}  // namespace pdg
