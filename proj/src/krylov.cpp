#include "pdg/krylov.hpp"

#include <cmath>

#include "pdg/matrix_io.hpp"

namespace pdg {

namespace {

void check_square(const SparseMat& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("solver requires a square matrix, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
}

void check_dims(const SparseMat& m, const Vector& b, const Vector& x0) {
  check_square(m);
  if (b.size() != m.rows() || x0.size() != m.rows())
    throw std::invalid_argument("vector length does not match matrix size");
}

}  // namespace

CycleResult gmres_cycle(const SparseMat& m, const Vector& b, const Vector& x0,
                        Index max_dim, double tol, const PrecondFn& precond,
                        Matrix* basis_out) {
  check_dims(m, b, x0);
  if (max_dim < 1) throw std::invalid_argument("max_dim must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");

  const Index n = m.rows();
  max_dim = std::min(max_dim, n);

  CycleResult res;
  res.x_new = x0;

  Vector r0 = b - m * x0;
  const double beta = r0.norm();
  if (!std::isfinite(beta))
    throw DivergenceError("non-finite initial residual");
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }
  const double breakdown_tol = 1e-14 * b.norm();

  // Arnoldi basis, Hessenberg factors after Givens, rotation pairs and the
  // rotated right-hand side g.
  Matrix basis(n, max_dim + 1);
  Matrix hess = Matrix::Zero(max_dim + 1, max_dim);
  Vector cs(max_dim), sn(max_dim);
  Vector g = Vector::Zero(max_dim + 1);

  basis.col(0) = r0 / beta;
  g(0) = beta;

  Index k = 0;
  bool happy = false;
  for (; k < max_dim; ++k) {
    Vector z = precond ? precond(basis.col(k)) : Vector(basis.col(k));
    Vector w = m * z;
    for (Index i = 0; i <= k; ++i) {  // modified Gram-Schmidt, single pass
      const double h = basis.col(i).dot(w);
      hess(i, k) = h;
      w -= h * basis.col(i);
    }
    const double h_sub = w.norm();
    hess(k + 1, k) = h_sub;
    if (!std::isfinite(h_sub))
      throw DivergenceError("non-finite value in Arnoldi recurrence");

    for (Index i = 0; i < k; ++i) {
      const double t = cs(i) * hess(i, k) + sn(i) * hess(i + 1, k);
      hess(i + 1, k) = -sn(i) * hess(i, k) + cs(i) * hess(i + 1, k);
      hess(i, k) = t;
    }
    const double denom = std::hypot(hess(k, k), h_sub);
    if (denom == 0.0) {
      // Zero column: x does not improve in this direction; treat as
      // breakdown with the current iterate.
      cs(k) = 1.0;
      sn(k) = 0.0;
    } else {
      cs(k) = hess(k, k) / denom;
      sn(k) = h_sub / denom;
    }
    hess(k, k) = cs(k) * hess(k, k) + sn(k) * h_sub;
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);

    const double implicit_norm = std::abs(g(k + 1));
    res.inner_residual_norms.push_back(implicit_norm);

    if (h_sub <= breakdown_tol) {
      happy = true;
      ++k;
      break;
    }
    basis.col(k + 1) = w / h_sub;
    if (implicit_norm <= tol) {
      ++k;
      break;
    }
  }

  res.steps_taken = k;
  if (basis_out) *basis_out = basis.leftCols(k);
  if (k > 0) {
    // Back-substitution on the k x k triangular system.
    Vector y = hess.topLeftCorner(k, k)
                   .triangularView<Eigen::Upper>()
                   .solve(g.head(k));
    Vector update = basis.leftCols(k) * y;
    res.x_new = x0 + (precond ? precond(update) : update);
  }
  if (!res.x_new.allFinite())
    throw DivergenceError("non-finite iterate after least-squares update");
  res.converged =
      happy || (!res.inner_residual_norms.empty() &&
                res.inner_residual_norms.back() <= tol);
  return res;
}

SolveTrace gmres_restarted(const SparseMat& m, const Vector& b, int restart,
                           double tol, IterationBudget budget,
                           const PrecondFn& precond) {
  if (restart < 1) throw std::invalid_argument("restart must be >= 1");
  check_square(m);

  SolveTrace trace;
  Vector x = Vector::Zero(m.rows());
  trace.initial_norm = (b - m * x).norm();
  if (trace.initial_norm <= tol) {
    trace.converged = true;
    return trace;
  }

  double prev_norm = trace.initial_norm;
  const int m_used = static_cast<int>(
      std::min<Index>(restart, m.rows()));
  while (trace.total_inner_iterations < budget.max_inner) {
    CycleResult cycle = gmres_cycle(m, b, x, m_used, tol, precond);
    x = cycle.x_new;
    trace.restart_params.push_back(m_used);
    trace.cycle_steps.push_back(cycle.steps_taken);
    trace.inner_norms.insert(trace.inner_norms.end(),
                             cycle.inner_residual_norms.begin(),
                             cycle.inner_residual_norms.end());
    trace.total_inner_iterations += cycle.steps_taken;

    const double norm = true_residual_norm(m, b, x);
    if (!std::isfinite(norm))
      throw DivergenceError("non-finite residual at restart boundary");
    trace.restart_norms.push_back(norm);
    if (norm <= tol) {
      trace.converged = true;
      return trace;
    }
    if (cycle.steps_taken == 0 ||
        std::abs(prev_norm - norm) <= 1e-14 * prev_norm) {
      // A fixed-restart cycle that made no progress will repeat itself
      // forever: stagnation.
      return trace;
    }
    prev_norm = norm;
  }
  return trace;
}

double true_residual_norm(const SparseMat& m, const Vector& b,
                          const Vector& x) {
  if (b.size() != m.rows() || x.size() != m.cols())
    throw std::invalid_argument("true_residual_norm: dimension mismatch");
  return (b - m * x).norm();
}

}  // namespace pdg
