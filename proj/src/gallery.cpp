#include "pdg/gallery.hpp"

#include <vector>

#include "pdg/matrix_io.hpp"

namespace pdg {

SparseMat identity_matrix(Index n) {
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
  return from_triplets(n, ts);
}

SparseMat convection_diffusion_2d(Index grid, double cx, double cy) {
  if (grid < 2) throw std::invalid_argument("grid must be >= 2");
  const Index n = grid * grid;
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(5 * n));
  auto id = [grid](Index i, Index j) { return i * grid + j; };
  // Unscaled 5-point stencil; central differences for the convection terms,
  // so the matrix is nonsymmetric whenever cx or cy is nonzero.
  for (Index i = 0; i < grid; ++i)
    for (Index j = 0; j < grid; ++j) {
      const Index row = id(i, j);
      ts.push_back({row, row, 4.0});
      if (i > 0) ts.push_back({row, id(i - 1, j), -1.0 - cy / 2.0});
      if (i < grid - 1) ts.push_back({row, id(i + 1, j), -1.0 + cy / 2.0});
      if (j > 0) ts.push_back({row, id(i, j - 1), -1.0 - cx / 2.0});
      if (j < grid - 1) ts.push_back({row, id(i, j + 1), -1.0 + cx / 2.0});
    }
  return from_triplets(n, ts);
}

SparseMat laplacian_2d(Index grid) {
  return convection_diffusion_2d(grid, 0.0, 0.0);
}

}  // namespace pdg
