#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pdg/controller.hpp"
#include "pdg/krylov.hpp"
#include "pdg/types.hpp"

namespace pdg {

/// Objective value reported for a solve that did not converge within its
/// budget. Finite so geometric-mean aggregation stays well defined, and far
/// above any achievable model cost at desk scale.
constexpr double kPenalty = 1e18;

/// Per-cycle cost model h(m) = a2 m^2 + a1 m + a0, clamped below by
/// floor_value.
struct RuntimeModel {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  enum class Source { kMeasured, kSynthetic } source = Source::kSynthetic;
  double floor_value = 1e-12;

  double predict(double m) const {
    const double v = (a2 * m + a1) * m + a0;
    return v < floor_value ? floor_value : v;
  }
};

/// Residual-norm window over which solves are scored.
struct ToleranceWindow {
  double tol_max = 1e-3;
  double tol_min = 1e-9;

  void validate() const {
    if (!(tol_max > tol_min) || !(tol_min > 0.0))
      throw std::invalid_argument("window requires tol_max > tol_min > 0");
  }
};

/// Fits h by timing single restart cycles of GMRES(m) at each sample
/// dimension (median of `trials` wall-clock measurements) and solving the
/// quadratic least-squares problem. Requires at least 3 distinct dims, each
/// <= n. Timings depend on the machine; see synthetic_model for a
/// deterministic substitute.
RuntimeModel calibrate(const SparseMat& m, const std::vector<int>& sample_dims,
                       int trials = 5);

/// Least-squares quadratic fit through (dim, cost) pairs. Exposed separately
/// so the fit can be tested without timing noise.
RuntimeModel fit_quadratic(const std::vector<int>& dims,
                           const std::vector<double>& costs);

/// Deterministic stand-in for calibrate: h(m) = nnz*m + n*m^2/2 in abstract
/// flop units.
RuntimeModel synthetic_model(const SparseMat& m);

/// True when the trace has at least two inner residual norms strictly inside
/// the window with distinct extremes, i.e. averaged_heuristic is defined.
bool window_covered(const SolveTrace& trace, const ToleranceWindow& window);

/// Model-cost estimate of a traced solve, averaging the cumulative cost at
/// each in-window inner iteration weighted by the log residual improvement
/// between consecutive in-window residuals. The weights sum to 1. Throws
/// std::invalid_argument when fewer than two in-window residuals exist or
/// all in-window norms coincide.
double averaged_heuristic(const SolveTrace& trace, const RuntimeModel& model,
                          const ToleranceWindow& window);

/// The weighted inner indices and their weights, as used by
/// averaged_heuristic: index k weights the improvement from the previous
/// in-window residual to residual k, normalized by the full in-window log
/// span. The earliest in-window index carries no weight and is not listed.
std::pair<std::vector<std::size_t>, std::vector<double>> heuristic_weights(
    const SolveTrace& trace, const ToleranceWindow& window);

/// Sum of h over the cycles actually performed.
double total_model_cost(const SolveTrace& trace, const RuntimeModel& model);

/// Scoring rule shared by objective and the tuner: kPenalty for a
/// non-converged trace, the total model cost when the solve never covered
/// the window, the averaged heuristic otherwise.
double score_trace(const SolveTrace& trace, const RuntimeModel& model,
                   const ToleranceWindow& window);

/// Runs pdgmres_solve to tol = window.tol_min and scores it: the averaged
/// heuristic when defined, the total model cost when the solve converged
/// before covering the window, kPenalty when it did not converge.
double objective(const SparseMat& m, const PdParams& params,
                 const RuntimeModel& model, const ToleranceWindow& window,
                 IterationBudget budget);

/// Cache record: model plus the matrix it was calibrated for.
void save_model(const RuntimeModel& model, const std::string& matrix_name,
                const std::string& path);
std::pair<RuntimeModel, std::string> load_model(const std::string& path);

}  // namespace pdg
