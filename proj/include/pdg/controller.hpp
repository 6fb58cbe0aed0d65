#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>

#include "pdg/krylov.hpp"
#include "pdg/types.hpp"

namespace pdg {

/// The five controller parameters plus the optional restart cap of the
/// extended reset rule.
struct PdParams {
  int m_init = 30;
  int m_min = 1;
  int m_step = 3;
  double alpha_p = -3.0;
  double alpha_d = 9.0;
  std::optional<int> m_max;

  /// Throws std::invalid_argument if any bound is violated
  /// (m_init, m_min, m_step >= 1; m_max >= m_init when present).
  void validate() const;
};

/// Named parameter sets. CLI spelling: "default", "optimized",
/// "specialized", "problematic-test".
enum class PresetName { kDefault, kOptimized, kSpecialized, kProblematicTest };

PdParams preset(PresetName name);
PdParams preset(const std::string& name);

/// Controller state carried between restarts. recent_norms holds the restart
/// residual norms most-recent first: ||r_j||, ||r_{j-1}||, ||r_{j-2}||.
/// carry is the stored rounding remainder; it stays 0 unless alpha_p > 0.
struct ControllerState {
  int m_current = 0;
  int reset_counter = 0;
  double carry = 0.0;
  std::array<double, 3> recent_norms{0.0, 0.0, 0.0};
  int norms_seen = 0;
  int restart_index = 0;

  void push_norm(double norm) {
    recent_norms[2] = recent_norms[1];
    recent_norms[1] = recent_norms[0];
    recent_norms[0] = norm;
    if (norms_seen < 3) ++norms_seen;
  }
};

/// alpha_p * ||r_j|| / ||r_{j-1}||.
double proportional_term(double alpha_p, double norm_j, double norm_jm1);

/// alpha_d * (||r_j|| - ||r_{j-2}||) / (2 ||r_{j-1}||).
double derivative_term(double alpha_d, double norm_j, double norm_jm1,
                       double norm_jm2);

/// One controller step: produces the next restart parameter and the updated
/// state. The caller is responsible for clamping the returned value to the
/// matrix dimension and writing the clamped value back into
/// state.m_current before the next call (pdgmres_solve does this).
std::pair<int, ControllerState> next_restart(const ControllerState& state,
                                             const PdParams& params);

/// Restarted GMRES whose per-cycle restart parameter is produced by
/// next_restart from the explicitly recomputed residual norms at each
/// restart boundary. x0 = 0 throughout. Restart parameters are clamped to
/// min(candidate, n).
SolveTrace pdgmres_solve(const SparseMat& m, const Vector& b,
                         const PdParams& params, double tol,
                         IterationBudget budget,
                         const PrecondFn& precond = {});

}  // namespace pdg
