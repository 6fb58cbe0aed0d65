#include "pdg/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdg/controller.hpp"
#include "pdg/gallery.hpp"
#include "pdg/ilu0.hpp"
#include "pdg/krylov.hpp"
#include "pdg/matrix_io.hpp"
#include "pdg/quadtree.hpp"
#include "pdg/runtime_model.hpp"
#include "pdg/tuner.hpp"

namespace fs = std::filesystem;

namespace pdg {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& options) {
  fs::create_directories(out_dir);
  nlohmann::json j;
  j["command"] = command;
  j["options"] = options;
  std::ofstream f(out_dir + "/manifest.json");
  f << j.dump(2) << '\n';
}

void write_trace_csv(const SolveTrace& trace, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write trace to " + path);
  f << "inner_index,residual_norm,cycle,m\n";
  f << "0," << format_double(trace.initial_norm) << ",0,0\n";
  std::size_t pos = 0;
  for (std::size_t c = 0; c < trace.cycle_steps.size(); ++c)
    for (Index s = 0; s < trace.cycle_steps[c]; ++s) {
      ++pos;
      f << pos << ',' << format_double(trace.inner_norms[pos - 1]) << ','
        << c + 1 << ',' << trace.restart_params[c] << '\n';
    }
}

struct SharedOptions {
  double tol = 1e-9;
  bool relative_tol = false;
  long budget = 0;  // 0 = auto (min(50 n, 200000))
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool synthetic = false;
  double window_max = 1e-3;
  double window_min = 1e-9;
  std::string config_path;
};

void add_shared(CLI::App* cmd, SharedOptions& o) {
  cmd->add_option("--tol", o.tol, "convergence tolerance on ||b - Mx||");
  cmd->add_flag("--relative", o.relative_tol,
                "interpret --tol relative to ||b||");
  cmd->add_option("--budget", o.budget,
                  "max total inner iterations (0 = min(50 n, 200000))");
  cmd->add_option("--seed", o.seed, "seed for randomized choices");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_flag("--synthetic", o.synthetic,
                "use the deterministic flop-count cost model");
  cmd->add_option("--window-max", o.window_max, "scoring window upper bound");
  cmd->add_option("--window-min", o.window_min, "scoring window lower bound");
  cmd->add_option("--config", o.config_path,
                  "JSON config file; explicit flags win");
}

// Config-file values fill in options the user did not pass on the command
// line.
void apply_config(CLI::App* cmd, SharedOptions& o) {
  if (o.config_path.empty()) return;
  std::ifstream f(o.config_path);
  if (!f) throw std::runtime_error("cannot open config: " + o.config_path);
  nlohmann::json j;
  f >> j;
  auto maybe = [&](const char* flag, auto& slot) {
    const std::string key = flag + 2;  // strip "--"
    if (j.contains(key) && cmd->count(flag) == 0)
      slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  maybe("--tol", o.tol);
  maybe("--budget", o.budget);
  maybe("--seed", o.seed);
  maybe("--out", o.out_dir);
  maybe("--window-max", o.window_max);
  maybe("--window-min", o.window_min);
  if (j.contains("synthetic") && cmd->count("--synthetic") == 0)
    o.synthetic = j.at("synthetic").get<bool>();
  if (j.contains("relative") && cmd->count("--relative") == 0)
    o.relative_tol = j.at("relative").get<bool>();
}

IterationBudget budget_for(const SharedOptions& o, const SparseMat& m) {
  return o.budget > 0 ? IterationBudget{o.budget}
                      : IterationBudget::for_dim(m.rows());
}

RuntimeModel model_for(const SparseMat& m, const std::string& model_path) {
  if (!model_path.empty()) return load_model(model_path).first;
  return synthetic_model(m);
}

nlohmann::json shared_json(const SharedOptions& o) {
  nlohmann::json j;
  j["tol"] = o.tol;
  j["relative"] = o.relative_tol;
  j["budget"] = o.budget;
  j["seed"] = o.seed;
  j["out"] = o.out_dir;
  j["synthetic"] = o.synthetic;
  j["window_max"] = o.window_max;
  j["window_min"] = o.window_min;
  return j;
}

// ---------------------------------------------------------------- solve --

struct SolveOptions {
  SharedOptions shared;
  std::string matrix_path;
  std::string preset_name;
  std::optional<int> fixed_restart;
  PdParams params = preset(PresetName::kDefault);
  bool explicit_params = false;
  std::optional<int> m_max;
  bool use_ilu0 = false;
  std::string model_path;
};

int cmd_solve(const SolveOptions& opt) {
  SparseMat m;
  try {
    m = load_matrix_market(opt.matrix_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  }
  if (m.rows() != m.cols()) {
    std::cerr << "error: matrix must be square\n";
    return kExitParse;
  }

  const Vector b = Vector::Ones(m.rows());
  const double tol =
      opt.shared.relative_tol ? opt.shared.tol * b.norm() : opt.shared.tol;
  const IterationBudget budget = budget_for(opt.shared, m);

  PdParams params = opt.params;
  if (!opt.preset_name.empty()) params = preset(opt.preset_name);
  if (opt.m_max) params.m_max = opt.m_max;

  PrecondFn precond;
  bool ilu_failed = false;
  std::string ilu_error;
  if (opt.use_ilu0) {
    try {
      precond = ilu0_factor(m).as_precond();
    } catch (const FactorizationError& e) {
      ilu_failed = true;
      ilu_error = e.what();
      std::cerr << "warning: ilu0 failed (" << e.what()
                << "); continuing unpreconditioned\n";
    }
  }

  SolveTrace trace;
  try {
    if (opt.fixed_restart)
      trace = gmres_restarted(m, b, *opt.fixed_restart, tol, budget, precond);
    else
      trace = pdgmres_solve(m, b, params, tol, budget, precond);
  } catch (const DivergenceError& e) {
    std::cerr << "error: divergence: " << e.what() << '\n';
    return kExitDivergence;
  }

  fs::create_directories(opt.shared.out_dir);
  const std::string trace_path = opt.shared.out_dir + "/trace.csv";
  write_trace_csv(trace, trace_path);

  nlohmann::json man = shared_json(opt.shared);
  man["matrix"] = opt.matrix_path;
  man["ilu0"] = opt.use_ilu0;
  man["ilu0_failed"] = ilu_failed;
  if (ilu_failed) man["ilu0_error"] = ilu_error;
  if (opt.fixed_restart) {
    man["fixed_restart"] = *opt.fixed_restart;
  } else {
    man["preset"] = opt.preset_name;
    man["m_init"] = params.m_init;
    man["m_min"] = params.m_min;
    man["m_step"] = params.m_step;
    man["alpha_p"] = params.alpha_p;
    man["alpha_d"] = params.alpha_d;
    if (params.m_max) man["m_max"] = *params.m_max;
  }
  write_manifest(opt.shared.out_dir, "solve", man);

  std::cout << "matrix: " << opt.matrix_path << " (n=" << m.rows()
            << ", nnz=" << m.nonZeros() << ")\n";
  if (opt.fixed_restart)
    std::cout << "solver: gmres(" << *opt.fixed_restart << ")\n";
  else
    std::cout << "solver: pd-gmres m_init=" << params.m_init
              << " m_min=" << params.m_min << " m_step=" << params.m_step
              << " alpha_p=" << format_double(params.alpha_p)
              << " alpha_d=" << format_double(params.alpha_d)
              << (params.m_max ? " m_max=" + std::to_string(*params.m_max)
                               : "")
              << '\n';
  std::cout << "converged: " << (trace.converged ? "yes" : "no") << '\n';
  std::cout << "inner iterations: " << trace.total_inner_iterations << '\n';
  std::cout << "restarts: " << trace.restart_params.size() << '\n';
  std::cout << "resets: " << trace.resets << '\n';
  std::cout << "final residual: " << format_double(trace.final_residual_norm())
            << '\n';
  if (opt.shared.synthetic || !opt.model_path.empty()) {
    const RuntimeModel model = model_for(m, opt.model_path);
    ToleranceWindow window{opt.shared.window_max, opt.shared.window_min};
    const double cost = score_trace(trace, model, window);
    std::cout << "heuristic cost: " << format_double(cost) << " ("
              << (model.source == RuntimeModel::Source::kMeasured
                      ? "measured"
                      : "synthetic")
              << " model)\n";
  }
  std::cout << "trace: " << trace_path << '\n';
  return trace.converged ? kExitOk : kExitNoConvergence;
}

// ------------------------------------------------------------ calibrate --

struct CalibrateOptions {
  SharedOptions shared;
  std::string matrix_path;
  std::vector<int> dims{5, 10, 20, 30, 50};
  int trials = 5;
};

int cmd_calibrate(const CalibrateOptions& opt) {
  SparseMat m;
  try {
    m = load_matrix_market(opt.matrix_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  }
  std::vector<int> dims;
  for (int d : opt.dims)
    if (d <= m.rows()) dims.push_back(d);
  if (dims.size() < 3) {
    std::cerr << "error: need at least 3 sample dims <= n\n";
    return kExitUsage;
  }

  RuntimeModel model;
  if (opt.shared.synthetic)
    model = synthetic_model(m);
  else
    model = calibrate(m, dims, opt.trials);

  fs::create_directories(opt.shared.out_dir);
  const std::string name = stem_of(opt.matrix_path);
  const std::string path = opt.shared.out_dir + "/" + name + ".model.json";
  save_model(model, name, path);

  nlohmann::json man = shared_json(opt.shared);
  man["matrix"] = opt.matrix_path;
  man["dims"] = dims;
  man["trials"] = opt.trials;
  write_manifest(opt.shared.out_dir, "calibrate", man);

  std::cout << "model: h(m) = " << format_double(model.a2) << "*m^2 + "
            << format_double(model.a1) << "*m + " << format_double(model.a0)
            << " ("
            << (model.source == RuntimeModel::Source::kMeasured ? "measured"
                                                                : "synthetic")
            << ")\n";
  std::cout << "written: " << path << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- tune --

struct TuneOptions {
  SharedOptions shared;
  std::vector<std::string> matrix_paths;
  std::vector<int> m_inits{10, 20, 30};
  int cycles = 3;
  std::string quadrant = "negative";
  std::string models_dir;
  double step_budget = 0.0;
  int probe_points = 5;
};

int cmd_tune(const TuneOptions& opt) {
  std::vector<MatrixEntry> entries;
  for (const auto& path : opt.matrix_paths) {
    MatrixEntry e;
    e.name = stem_of(path);
    try {
      e.matrix = load_matrix_market(path);
    } catch (const std::exception& ex) {
      std::cerr << "error: " << ex.what() << '\n';
      return kExitParse;
    }
    if (opt.shared.synthetic || opt.models_dir.empty()) {
      e.model = synthetic_model(e.matrix);
    } else {
      const std::string mp = opt.models_dir + "/" + e.name + ".model.json";
      try {
        e.model = load_model(mp).first;
      } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitParse;
      }
    }
    entries.push_back(std::move(e));
  }

  TuningConfig config;
  config.m_init_candidates = opt.m_inits;
  config.cycles = opt.cycles;
  config.window = ToleranceWindow{opt.shared.window_max, opt.shared.window_min};
  config.solve_budget = opt.shared.budget;
  config.step_cost_budget = opt.step_budget;
  config.probe_points = opt.probe_points;
  config.seed = opt.shared.seed;
  if (opt.quadrant == "positive")
    config.alpha_domain = ParamDomain{0.0, 40.0, 0.0, 40.0, false, false};
  else if (opt.quadrant != "negative") {
    std::cerr << "error: --quadrant must be negative or positive\n";
    return kExitUsage;
  }

  OptimizationReport report = run_procedure(entries, config);
  save_report(report, opt.shared.out_dir);

  nlohmann::json man = shared_json(opt.shared);
  man["matrices"] = opt.matrix_paths;
  man["m_init"] = opt.m_inits;
  man["cycles"] = opt.cycles;
  man["quadrant"] = opt.quadrant;
  man["models_dir"] = opt.models_dir;
  man["step_budget"] = opt.step_budget;
  man["probe_points"] = opt.probe_points;
  write_manifest(opt.shared.out_dir, "tune", man);

  std::cout << "winner: m_init=" << report.winner.m_init
            << " m_min=" << report.winner.m_min
            << " m_step=" << report.winner.m_step
            << " alpha_p=" << format_double(report.winner.alpha_p)
            << " alpha_d=" << format_double(report.winner.alpha_d)
            << " geomean=" << format_double(report.winner_geomean) << '\n';
  std::cout << "report: " << opt.shared.out_dir << "/report.txt\n";
  return kExitOk;
}

// -------------------------------------------------------------- compare --

struct SolverSpec {
  std::string label;
  bool fixed = false;
  int restart = 30;
  PdParams params;
};

SolverSpec parse_solver_spec(const std::string& text) {
  SolverSpec spec;
  spec.label = text;
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument(
        "solver spec must be preset:<name>, gmres:<m> or "
        "pd:m_init,m_min,m_step,alpha_p,alpha_d[,m_max]");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "preset") {
    spec.params = preset(rest);
  } else if (kind == "gmres") {
    spec.fixed = true;
    spec.restart = std::stoi(rest);
    if (spec.restart < 1)
      throw std::invalid_argument("gmres restart must be >= 1");
  } else if (kind == "pd") {
    std::vector<std::string> parts;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 5 && parts.size() != 6)
      throw std::invalid_argument(
          "pd: needs m_init,m_min,m_step,alpha_p,alpha_d[,m_max]");
    spec.params.m_init = std::stoi(parts[0]);
    spec.params.m_min = std::stoi(parts[1]);
    spec.params.m_step = std::stoi(parts[2]);
    spec.params.alpha_p = std::stod(parts[3]);
    spec.params.alpha_d = std::stod(parts[4]);
    if (parts.size() == 6) spec.params.m_max = std::stoi(parts[5]);
    spec.params.validate();
  } else {
    throw std::invalid_argument("unknown solver kind '" + kind + "'");
  }
  return spec;
}

struct CompareOptions {
  SharedOptions shared;
  std::vector<std::string> matrix_paths;
  std::vector<std::string> solver_specs;
  std::string models_dir;
};

int cmd_compare(const CompareOptions& opt) {
  std::vector<SolverSpec> solvers;
  try {
    for (const auto& s : opt.solver_specs)
      solvers.push_back(parse_solver_spec(s));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (solvers.size() < 2) {
    std::cerr << "error: need at least 2 --solver configurations\n";
    return kExitUsage;
  }

  const ToleranceWindow window{opt.shared.window_max, opt.shared.window_min};
  std::vector<std::string> names;
  Matrix costs(static_cast<Index>(opt.matrix_paths.size()),
               static_cast<Index>(solvers.size()));
  for (std::size_t i = 0; i < opt.matrix_paths.size(); ++i) {
    SparseMat m;
    try {
      m = load_matrix_market(opt.matrix_paths[i]);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitParse;
    }
    names.push_back(stem_of(opt.matrix_paths[i]));
    RuntimeModel model = synthetic_model(m);
    if (!opt.shared.synthetic && !opt.models_dir.empty()) {
      try {
        model =
            load_model(opt.models_dir + "/" + names.back() + ".model.json")
                .first;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
      }
    }
    const Vector b = Vector::Ones(m.rows());
    const IterationBudget budget = budget_for(opt.shared, m);
    for (std::size_t j = 0; j < solvers.size(); ++j) {
      SolveTrace trace;
      try {
        if (solvers[j].fixed)
          trace = gmres_restarted(m, b, solvers[j].restart, window.tol_min,
                                  budget);
        else
          trace = pdgmres_solve(m, b, solvers[j].params, window.tol_min,
                                budget);
        costs(static_cast<Index>(i), static_cast<Index>(j)) =
            score_trace(trace, model, window);
      } catch (const DivergenceError&) {
        costs(static_cast<Index>(i), static_cast<Index>(j)) = kPenalty;
      }
    }
  }

  // Normalize each row around the first configuration; column-wise
  // geometric means exclude rows where that column (or the reference) did
  // not converge.
  std::ostringstream table;
  table << "matrix";
  for (const auto& s : solvers) table << ',' << s.label;
  table << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    table << names[i];
    for (std::size_t j = 0; j < solvers.size(); ++j) {
      const double v = costs(static_cast<Index>(i), static_cast<Index>(j));
      table << ',' << (v >= kPenalty ? "-" : format_double(v));
    }
    table << '\n';
  }
  table << "geomean";
  for (std::size_t j = 0; j < solvers.size(); ++j) {
    double log_sum = 0.0;
    int counted = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double ref = costs(static_cast<Index>(i), 0);
      const double v = costs(static_cast<Index>(i), static_cast<Index>(j));
      if (ref >= kPenalty || v >= kPenalty) continue;
      log_sum += std::log(v / ref);
      ++counted;
    }
    table << ','
          << (counted == 0
                  ? "-"
                  : format_double(std::exp(log_sum / counted)));
  }
  table << '\n';

  fs::create_directories(opt.shared.out_dir);
  {
    std::ofstream f(opt.shared.out_dir + "/compare.csv");
    f << table.str();
  }
  nlohmann::json man = shared_json(opt.shared);
  man["matrices"] = opt.matrix_paths;
  man["solvers"] = opt.solver_specs;
  man["models_dir"] = opt.models_dir;
  write_manifest(opt.shared.out_dir, "compare", man);

  std::cout << table.str();
  std::cout << "written: " << opt.shared.out_dir << "/compare.csv\n";
  return kExitOk;
}

// --------------------------------------------------------------- render --

struct RenderOptions {
  SharedOptions shared;
  std::string csv_path;
  int depth = 6;
  std::vector<double> domain;  // u_lo, u_hi, v_lo, v_hi
  double factor = 1.5;
};

int cmd_render(const RenderOptions& opt) {
  if (opt.domain.size() != 4) {
    std::cerr << "error: --domain needs u_lo,u_hi,v_lo,v_hi\n";
    return kExitUsage;
  }
  ParamDomain domain{opt.domain[0], opt.domain[1], opt.domain[2],
                     opt.domain[3], false, false};
  try {
    domain.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::ifstream f(opt.csv_path);
  if (!f) {
    std::cerr << "error: cannot open " << opt.csv_path << '\n';
    return kExitParse;
  }
  std::vector<QuadtreeSample> samples;
  std::string line;
  long lineno = 0;
  try {
    while (std::getline(f, line)) {
      ++lineno;
      if (lineno == 1 || line.empty()) continue;  // header
      std::stringstream ss(line);
      std::string tok;
      QuadtreeSample s;
      if (!std::getline(ss, tok, ',')) throw ParseError("missing u", lineno);
      s.u = std::stod(tok);
      if (!std::getline(ss, tok, ',')) throw ParseError("missing v", lineno);
      s.v = std::stod(tok);
      if (!std::getline(ss, tok, ','))
        throw ParseError("missing value", lineno);
      s.value = std::stod(tok);
      if (!std::getline(ss, tok, ','))
        throw ParseError("missing level", lineno);
      s.level = std::stoi(tok);
      samples.push_back(s);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << opt.csv_path << ": " << e.what() << '\n';
    return kExitParse;
  }
  if (samples.empty()) {
    std::cerr << "error: no samples in " << opt.csv_path << '\n';
    return kExitParse;
  }

  // Rebuild the value grid by painting samples coarsest level first; each
  // sample covers the aligned block of its level that contains its point.
  const Index cells = Index(1) << opt.depth;
  QuadtreeResult result;
  result.depth = opt.depth;
  result.domain = domain;
  result.q = Matrix::Zero(cells, cells);
  result.penalized = BoolGrid::Constant(cells, cells, false);
  std::stable_sort(
      samples.begin(), samples.end(),
      [](const QuadtreeSample& a, const QuadtreeSample& b) {
        return a.level < b.level;
      });
  for (const auto& s : samples) {
    const int level = std::clamp(s.level, 0, opt.depth);
    const Index side = Index(1) << (opt.depth - level);
    auto [row, col] = cell_of(domain, opt.depth, s.u, s.v);
    row = row / side * side;
    col = col / side * side;
    const bool bad = !(s.value < kPenalty) || !std::isfinite(s.value);
    result.q.block(row, col, side, side).setConstant(s.value);
    result.penalized.block(row, col, side, side).setConstant(bad);
  }
  result.samples = samples;

  fs::create_directories(opt.shared.out_dir);
  const std::string out =
      opt.shared.out_dir + "/" + stem_of(opt.csv_path) + ".ppm";
  write_quadtree_ppm(result, out, opt.factor);

  nlohmann::json man = shared_json(opt.shared);
  man["csv"] = opt.csv_path;
  man["depth"] = opt.depth;
  man["domain"] = opt.domain;
  man["factor"] = opt.factor;
  write_manifest(opt.shared.out_dir, "render", man);

  std::cout << "written: " << out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "PD-GMRES: restarted GMRES with a PD-controlled restart parameter, "
      "plus a quadtree parameter tuner"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  CLI::App* solve = app.add_subcommand(
      "solve", "solve a Matrix Market system with PD-GMRES or GMRES(m)");
  solve->add_option("matrix", solve_opt.matrix_path, "input .mtx file")
      ->required();
  add_shared(solve, solve_opt.shared);
  solve->add_option("--preset", solve_opt.preset_name,
                    "default|optimized|specialized|problematic-test");
  int fixed_restart = 0;
  solve->add_option("--fixed-restart", fixed_restart,
                    "run plain GMRES(m) instead of PD-GMRES");
  solve->add_option("--m-init", solve_opt.params.m_init, "initial restart");
  solve->add_option("--m-min", solve_opt.params.m_min, "minimal restart");
  solve->add_option("--m-step", solve_opt.params.m_step, "reset increment");
  solve->add_option("--alpha-p", solve_opt.params.alpha_p,
                    "proportional coefficient");
  solve->add_option("--alpha-d", solve_opt.params.alpha_d,
                    "derivative coefficient");
  int m_max_val = 0;
  solve->add_option("--m-max", m_max_val, "restart cap (extended reset)");
  solve->add_flag("--ilu0", solve_opt.use_ilu0,
                  "apply an ILU(0) right preconditioner");
  solve->add_option("--model", solve_opt.model_path,
                    "cost model file for heuristic reporting");

  CalibrateOptions cal_opt;
  CLI::App* cal = app.add_subcommand(
      "calibrate", "fit the per-cycle cost model h(m) for a matrix");
  cal->add_option("matrix", cal_opt.matrix_path, "input .mtx file")
      ->required();
  add_shared(cal, cal_opt.shared);
  cal->add_option("--dims", cal_opt.dims, "sample restart dimensions")
      ->delimiter(',');
  cal->add_option("--trials", cal_opt.trials, "timing repetitions per dim");

  TuneOptions tune_opt;
  CLI::App* tune = app.add_subcommand(
      "tune", "run the alternating quadtree optimization over a matrix set");
  tune->add_option("matrices", tune_opt.matrix_paths, "input .mtx files")
      ->required()
      ->expected(-1);
  add_shared(tune, tune_opt.shared);
  tune->add_option("--m-init", tune_opt.m_inits, "m_init candidates")
      ->delimiter(',');
  tune->add_option("--cycles", tune_opt.cycles, "optimization cycles");
  tune->add_option("--quadrant", tune_opt.quadrant,
                   "alpha_p sign: negative (default) or positive");
  tune->add_option("--models", tune_opt.models_dir,
                   "directory of calibrated <name>.model.json files");
  tune->add_option("--step-budget", tune_opt.step_budget,
                   "model-cost budget per step (0 = full resolution)");
  tune->add_option("--probe-points", tune_opt.probe_points,
                   "probe solves per matrix for budgeting");

  CompareOptions cmp_opt;
  CLI::App* cmp = app.add_subcommand(
      "compare", "score several solver configurations over a matrix set");
  cmp->add_option("matrices", cmp_opt.matrix_paths, "input .mtx files")
      ->required()
      ->expected(-1);
  add_shared(cmp, cmp_opt.shared);
  cmp->add_option("--solver", cmp_opt.solver_specs,
                  "preset:<name> | gmres:<m> | pd:<mi,mm,ms,ap,ad[,mmax]> "
                  "(repeat; first is the normalization reference)")
      ->required();
  cmp->add_option("--models", cmp_opt.models_dir,
                  "directory of calibrated models");

  RenderOptions ren_opt;
  CLI::App* ren = app.add_subcommand(
      "render", "re-render a quadtree sample CSV as a PPM heatmap");
  ren->add_option("csv", ren_opt.csv_path, "samples CSV (u,v,value,level)")
      ->required();
  add_shared(ren, ren_opt.shared);
  ren->add_option("--depth", ren_opt.depth, "quadtree depth of the grid");
  ren->add_option("--domain", ren_opt.domain, "u_lo,u_hi,v_lo,v_hi")
      ->delimiter(',')
      ->required();
  ren->add_option("--factor", ren_opt.factor,
                  "color scale top as a multiple of the minimum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) {
      apply_config(solve, solve_opt.shared);
      if (solve->count("--fixed-restart"))
        solve_opt.fixed_restart = fixed_restart;
      if (solve->count("--m-max")) solve_opt.m_max = m_max_val;
      return cmd_solve(solve_opt);
    }
    if (cal->parsed()) {
      apply_config(cal, cal_opt.shared);
      return cmd_calibrate(cal_opt);
    }
    if (tune->parsed()) {
      apply_config(tune, tune_opt.shared);
      return cmd_tune(tune_opt);
    }
    if (cmp->parsed()) {
      apply_config(cmp, cmp_opt.shared);
      return cmd_compare(cmp_opt);
    }
    if (ren->parsed()) {
      apply_config(ren, ren_opt.shared);
      return cmd_render(ren_opt);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const DivergenceError& e) {
    std::cerr << "error: divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pdg
