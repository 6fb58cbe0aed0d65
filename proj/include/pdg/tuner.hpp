#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdg/controller.hpp"
#include "pdg/quadtree.hpp"
#include "pdg/runtime_model.hpp"
#include "pdg/types.hpp"

namespace pdg {

/// A named matrix with its per-matrix cost model.
struct MatrixEntry {
  std::string name;
  SparseMat matrix;
  RuntimeModel model;
};

/// Quadtree shape assigned to one matrix: depth plus one subdivision ratio
/// per level.
struct ResolutionBudget {
  int depth = 6;
  std::vector<double> ratios;

  /// Exact number of core evaluations a build with this shape performs
  /// (extra points not included): 1 + sum over levels of 4*ceil(s_i * n_i).
  long planned_evals() const;
};

/// Configuration of the alternating optimization procedure. Defaults mirror
/// the standard setup: alpha in [-40,0]x[0,40], (m_min, m_step) on the
/// integer grid [1,65]^2, initial choice (10,5), three cycles, m_init
/// candidates {10,20,30}.
struct TuningConfig {
  std::vector<int> m_init_candidates{10, 20, 30};
  int cycles = 3;
  ParamDomain alpha_domain{-40.0, 0.0, 0.0, 40.0, false, false};
  ParamDomain m_domain{1.0, 65.0, 1.0, 65.0, true, true};
  int initial_m_min = 10;
  int initial_m_step = 5;
  ToleranceWindow window;

  /// 0 = per-matrix default of min(50 n, 200000) total inner iterations.
  long solve_budget = 0;

  /// Quadtree shapes from most to least detailed; a matrix gets the first
  /// tier whose predicted step cost fits its share of step_cost_budget.
  std::vector<ResolutionBudget> tiers;
  /// Fallback when even a single probe solve exceeds the share.
  ResolutionBudget minimum_budget{2, {0.25, 0.25}};
  /// Model-cost budget per optimization step across the whole set;
  /// 0 = no budgeting, every matrix uses tiers.front().
  double step_cost_budget = 0.0;
  int probe_points = 5;
  std::uint64_t seed = 0;

  TuningConfig();
  void validate() const;

  IterationBudget budget_for(const SparseMat& m) const {
    return solve_budget > 0 ? IterationBudget{solve_budget}
                            : IterationBudget::for_dim(m.rows());
  }
};

/// Memoizing objective evaluator for one matrix. Tracks how many distinct
/// solver runs were performed and their summed model cost. Virtual so tests
/// can substitute a closed-form objective.
class ObjectiveCache {
 public:
  ObjectiveCache(const MatrixEntry* entry, ToleranceWindow window,
                 IterationBudget budget)
      : entry_(entry), window_(window), budget_(budget) {}
  virtual ~ObjectiveCache() = default;

  virtual double value(const PdParams& params);

  long solver_runs() const { return solver_runs_; }
  double model_cost() const { return model_cost_; }

 protected:
  using Key = std::tuple<int, int, int, std::uint64_t, std::uint64_t>;
  const MatrixEntry* entry_;
  ToleranceWindow window_;
  IterationBudget budget_;
  std::map<Key, double> cache_;
  long solver_runs_ = 0;
  double model_cost_ = 0.0;
};

using CacheFactory = std::function<std::unique_ptr<ObjectiveCache>(
    const MatrixEntry&, const TuningConfig&)>;

/// Which parameter pair a quadtree step varies.
enum class PairSpace { kAlphas, kMPair };

struct PairOutcome {
  std::pair<double, double> chosen;
  double chosen_value = 0.0;
  QuadtreeResult aggregate;
  std::vector<QuadtreeResult> per_matrix;
  std::vector<std::size_t> excluded;  // all-penalized matrices, by index
};

/// Normalizes each tree by its own minimum and takes the cell-wise
/// geometric mean. Cells penalized in any tree stay penalized. The
/// aggregate's samples are the union of the input sample positions carrying
/// aggregate values, so best_sample() selects the parameter pair. All trees
/// must share depth and domain.
QuadtreeResult aggregate_geomean(const std::vector<QuadtreeResult>& per_matrix);

/// One quadtree optimization step over `domain` for the pair selected by
/// `which`, holding the remaining parameters of `fixed` constant.
/// carry_best, when given, is evaluated as an extra point in every tree.
/// Matrices whose tree is entirely penalized are excluded from the
/// aggregate and reported in `excluded`. `caches` must be aligned with
/// `matrices` (pass {} to evaluate uncached).
PairOutcome optimize_pair(const std::vector<MatrixEntry>& matrices,
                          const PdParams& fixed, PairSpace which,
                          const ParamDomain& domain,
                          const std::vector<ResolutionBudget>& budgets,
                          const TuningConfig& config,
                          std::optional<std::pair<double, double>> carry_best,
                          std::vector<ObjectiveCache*> caches = {});

struct BudgetAssignment {
  std::vector<ResolutionBudget> budgets;              // per matrix
  std::vector<double> probe_costs;                    // mean model cost
  std::vector<std::pair<double, double>> probe_points;  // (alpha_p, alpha_d)
};

/// Probes each matrix at seeded random points of the alpha domain and
/// assigns the most detailed tier whose expected step cost
/// (mean probe cost * planned evaluations) fits the matrix's share of
/// config.step_cost_budget. Costlier matrices therefore get coarser trees.
BudgetAssignment budget_resolution(const std::vector<MatrixEntry>& matrices,
                                   double time_budget, int probe_points,
                                   const TuningConfig& config);

struct StepRecord {
  int m_init = 0;
  int cycle = 0;
  PairSpace space = PairSpace::kAlphas;
  ParamDomain domain;
  std::pair<double, double> chosen;
  double chosen_value = 0.0;
  double geomean_raw = 0.0;  // over matrices, at the params after this step
  std::vector<std::string> excluded;
  long evaluations = 0;  // samples recorded across per-matrix trees
  QuadtreeResult aggregate;
  std::vector<QuadtreeResult> per_matrix;
};

struct CandidateOutcome {
  int m_init = 0;
  PdParams final_params;
  double final_geomean = 0.0;
  std::vector<double> trajectory;  // geomean after each step, first = 1
};

struct MatrixTotals {
  std::string name;
  double probe_cost = 0.0;
  long evaluations = 0;  // tree samples requested
  long solver_runs = 0;  // distinct solves performed
  double model_cost = 0.0;
};

struct OptimizationReport {
  TuningConfig config;
  std::vector<std::string> matrix_names;
  BudgetAssignment budgets;
  std::vector<StepRecord> steps;
  std::vector<CandidateOutcome> candidates;
  PdParams winner;
  double winner_geomean = 0.0;
  std::vector<MatrixTotals> totals;
  long total_evaluations = 0;
  long total_solver_runs = 0;
  double total_model_cost = 0.0;
};

/// The alternating procedure: for each m_init candidate, cycles of
/// (alpha_p, alpha_d) then (m_min, m_step) quadtree steps with domains
/// halved around the incumbent after every full cycle, then a final
/// re-evaluation of every candidate on the full set to pick the winner.
/// cache_factory substitutes the objective evaluator (tests use this);
/// empty means the real solver-backed cache.
OptimizationReport run_procedure(const std::vector<MatrixEntry>& matrices,
                                 const TuningConfig& config,
                                 const CacheFactory& cache_factory = {});

/// Deterministic structured-text rendering of the report (no artifacts).
void write_report(const OptimizationReport& report, std::ostream& out);

/// Writes report.txt plus per-step quadtree images and sample tables under
/// `dir` (created if absent).
void save_report(const OptimizationReport& report, const std::string& dir);

}  // namespace pdg
