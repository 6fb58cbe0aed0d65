#pragma once

namespace pdg {

/// Entry point behind the pdgmres binary. Subcommands:
/// solve | calibrate | tune | compare | render.
/// Exit codes: 0 success, 1 usage error, 2 input parse failure,
/// 3 non-convergence, 4 divergence or numerical failure.
int run_cli(int argc, const char* const* argv);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitDivergence = 4;

}  // namespace pdg
