#include "pdg/controller.hpp"

#include <cmath>

namespace pdg {

void PdParams::validate() const {
  if (m_init < 1 || m_min < 1 || m_step < 1)
    throw std::invalid_argument(
        "m_init, m_min and m_step must all be >= 1");
  if (m_max && *m_max < m_init)
    throw std::invalid_argument("m_max must be >= m_init");
  if (!std::isfinite(alpha_p) || !std::isfinite(alpha_d))
    throw std::invalid_argument("alpha_p and alpha_d must be finite");
}

PdParams preset(PresetName name) {
  switch (name) {
    case PresetName::kDefault:
      return {30, 1, 3, -3.0, 9.0, std::nullopt};
    case PresetName::kOptimized:
      return {10, 3, 10, -0.625, 4.375, std::nullopt};
    case PresetName::kSpecialized:
      return {30, 33, 39, -42.5, 0.0, std::nullopt};
    case PresetName::kProblematicTest:
      return {50, 51, 76, -41.25, 29.375, std::nullopt};
  }
  throw std::invalid_argument("unknown preset");
}

PdParams preset(const std::string& name) {
  if (name == "default") return preset(PresetName::kDefault);
  if (name == "optimized") return preset(PresetName::kOptimized);
  if (name == "specialized") return preset(PresetName::kSpecialized);
  if (name == "problematic-test") return preset(PresetName::kProblematicTest);
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected default, optimized, specialized "
                              "or problematic-test)");
}

double proportional_term(double alpha_p, double norm_j, double norm_jm1) {
  if (norm_jm1 == 0.0)
    throw std::invalid_argument(
        "proportional_term: ||r_{j-1}|| is zero (solve already converged)");
  return alpha_p * norm_j / norm_jm1;
}

double derivative_term(double alpha_d, double norm_j, double norm_jm1,
                       double norm_jm2) {
  if (norm_jm1 == 0.0)
    throw std::invalid_argument(
        "derivative_term: ||r_{j-1}|| is zero (solve already converged)");
  return alpha_d * (norm_j - norm_jm2) / (2.0 * norm_jm1);
}

std::pair<int, ControllerState> next_restart(const ControllerState& state,
                                             const PdParams& params) {
  ControllerState next = state;
  const int j = state.restart_index;

  int candidate;
  if (j == 0) {
    candidate = params.m_init;
  } else {
    double sum = proportional_term(params.alpha_p, state.recent_norms[0],
                                   state.recent_norms[1]);
    if (j >= 2)
      sum += derivative_term(params.alpha_d, state.recent_norms[0],
                             state.recent_norms[1], state.recent_norms[2]);
    double floored;
    if (params.alpha_p > 0.0) {
      // Store the rounding remainder and re-add it next time.
      sum += state.carry;
      floored = std::floor(sum);
      next.carry = sum - floored;
    } else {
      floored = std::floor(sum);
      next.carry = 0.0;
    }
    candidate = state.m_current + static_cast<int>(floored);
  }

  if (candidate < params.m_min) {
    ++next.reset_counter;
    candidate = params.m_init + next.reset_counter * params.m_step;
  }
  if (params.m_max && candidate > *params.m_max) {
    next.reset_counter = 0;
    candidate = params.m_init;
  }

  next.m_current = candidate;
  next.restart_index = j + 1;
  return {candidate, next};
}

SolveTrace pdgmres_solve(const SparseMat& m, const Vector& b,
                         const PdParams& params, double tol,
                         IterationBudget budget, const PrecondFn& precond) {
  params.validate();
  if (m.rows() != m.cols())
    throw std::invalid_argument("pdgmres_solve requires a square matrix");
  const Index n = m.rows();

  SolveTrace trace;
  Vector x = Vector::Zero(n);
  trace.initial_norm = (b - m * x).norm();
  if (!std::isfinite(trace.initial_norm))
    throw DivergenceError("non-finite initial residual");
  if (trace.initial_norm <= tol) {
    trace.converged = true;
    return trace;
  }

  ControllerState state;
  state.push_norm(trace.initial_norm);

  while (trace.total_inner_iterations < budget.max_inner) {
    auto [candidate, next] = next_restart(state, params);
    const int m_used =
        static_cast<int>(std::min<Index>(candidate, n));
    next.m_current = m_used;
    state = next;

    CycleResult cycle = gmres_cycle(m, b, x, m_used, tol, precond);
    x = cycle.x_new;
    trace.restart_params.push_back(m_used);
    trace.cycle_steps.push_back(cycle.steps_taken);
    trace.inner_norms.insert(trace.inner_norms.end(),
                             cycle.inner_residual_norms.begin(),
                             cycle.inner_residual_norms.end());
    trace.total_inner_iterations += cycle.steps_taken;
    trace.resets = state.reset_counter;

    const double norm = true_residual_norm(m, b, x);
    if (!std::isfinite(norm))
      throw DivergenceError("non-finite residual at restart boundary");
    trace.restart_norms.push_back(norm);
    if (norm <= tol || norm < 1e-300) {
      // The second case guards the controller's divisions: a denominator
      // this small means the system is solved to machine terms.
      trace.converged = true;
      return trace;
    }
    state.push_norm(norm);
  }
  return trace;
}

}  // namespace pdg
