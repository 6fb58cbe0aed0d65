#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "pdg/types.hpp"

namespace pdg {

/// Right preconditioner application z = P^{-1} v. Empty function means the
/// identity (no preconditioning).
using PrecondFn = std::function<Vector(const Vector&)>;

/// Cap on the total number of inner iterations of a restarted solve. Stands
/// in for a wall-clock limit so results are machine independent.
struct IterationBudget {
  long max_inner = 200000;

  static IterationBudget for_dim(Index n) {
    IterationBudget b;
    b.max_inner = std::min<long>(50 * static_cast<long>(n), 200000);
    return b;
  }
  static IterationBudget unlimited() {
    return IterationBudget{std::numeric_limits<long>::max()};
  }
};

/// Outcome of one restart cycle. inner_residual_norms holds the implicit
/// (Givens-updated) residual norm after each Arnoldi step; it is
/// non-increasing because GMRES minimizes over nested subspaces.
struct CycleResult {
  Vector x_new;
  std::vector<double> inner_residual_norms;
  Index steps_taken = 0;
  bool converged = false;
};

/// Record of a whole restarted solve. inner_norms has one entry per inner
/// iteration across all cycles; restart_norms holds the explicitly
/// recomputed ||b - Mx|| at each restart boundary. cycle_steps are the inner
/// steps actually taken per cycle (== the planned restart parameter except
/// when a cycle converges or breaks down early).
struct SolveTrace {
  std::vector<int> restart_params;
  std::vector<Index> cycle_steps;
  double initial_norm = 0.0;
  std::vector<double> inner_norms;
  std::vector<double> restart_norms;
  long total_inner_iterations = 0;
  int resets = 0;
  bool converged = false;

  double final_residual_norm() const {
    return restart_norms.empty() ? initial_norm : restart_norms.back();
  }
};

/// One cycle of GMRES via Arnoldi (modified Gram-Schmidt) with Givens
/// rotations for the least-squares update. Right-preconditioned when precond
/// is non-empty; reported residuals are residuals of the original system.
/// Stops at max_dim steps, at implicit residual <= tol, or at happy
/// breakdown (subdiagonal <= 1e-14 * ||b||, an exact solve in the current
/// subspace). Throws DivergenceError if non-finite values appear.
/// basis_out, when non-null, receives the n x steps_taken Arnoldi basis.
CycleResult gmres_cycle(const SparseMat& m, const Vector& b, const Vector& x0,
                        Index max_dim, double tol,
                        const PrecondFn& precond = {},
                        Matrix* basis_out = nullptr);

/// Classic GMRES(restart): repeats gmres_cycle with a fixed restart until
/// the explicit residual norm drops below tol, the budget is exhausted, or
/// the iteration stagnates (residual unchanged across a full cycle within
/// relative 1e-14, which for a fixed restart means it never improves).
SolveTrace gmres_restarted(const SparseMat& m, const Vector& b, int restart,
                           double tol, IterationBudget budget,
                           const PrecondFn& precond = {});

/// ||b - m x||_2, recomputed from scratch.
double true_residual_norm(const SparseMat& m, const Vector& b,
                          const Vector& x);

}  // namespace pdg
