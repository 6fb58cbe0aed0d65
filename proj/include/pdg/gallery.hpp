#pragma once

#include "pdg/types.hpp"

namespace pdg {

SparseMat identity_matrix(Index n);

/// 5-point Laplacian on a grid x grid unit-square mesh (n = grid^2).
SparseMat laplacian_2d(Index grid);

/// Central-difference convection-diffusion operator
/// -lap(u) + cx u_x + cy u_y on the same mesh; nonsymmetric for
/// nonzero convection coefficients.
SparseMat convection_diffusion_2d(Index grid, double cx, double cy);

}  // namespace pdg
