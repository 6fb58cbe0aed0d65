#include "pdg/tuner.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <random>
#include <set>

namespace pdg {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_domain(const ParamDomain& d) {
  return "[" + format_double(d.u_lo) + "," + format_double(d.u_hi) + "]x[" +
         format_double(d.v_lo) + "," + format_double(d.v_hi) + "]";
}

std::string space_name(PairSpace s) {
  return s == PairSpace::kAlphas ? "alpha" : "m";
}

}  // namespace

long ResolutionBudget::planned_evals() const {
  long total = 1;
  long blocks = 1;
  for (double s : ratios) {
    const long chosen = static_cast<long>(
        std::ceil(s * static_cast<double>(blocks)));
    blocks = 4 * chosen;
    total += blocks;
  }
  return total;
}

TuningConfig::TuningConfig() {
  tiers = {ResolutionBudget{6, {1.0, 1.0, 0.5, 0.25, 0.25, 0.25}},
           ResolutionBudget{6, {1.0, 0.5, 0.5, 0.25, 0.25, 0.25}},
           ResolutionBudget{6, {1.0, 0.5, 0.25, 0.25, 0.25, 0.25}}};
}

void TuningConfig::validate() const {
  if (m_init_candidates.empty())
    throw std::invalid_argument("need at least one m_init candidate");
  for (int m : m_init_candidates)
    if (m < 1) throw std::invalid_argument("m_init candidates must be >= 1");
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  if (initial_m_min < 1 || initial_m_step < 1)
    throw std::invalid_argument("initial m_min/m_step must be >= 1");
  alpha_domain.validate();
  m_domain.validate();
  window.validate();
  if (tiers.empty()) throw std::invalid_argument("need at least one tier");
  if (probe_points < 1)
    throw std::invalid_argument("probe_points must be >= 1");
}

double ObjectiveCache::value(const PdParams& params) {
  const Key key{params.m_init, params.m_min, params.m_step,
                std::bit_cast<std::uint64_t>(params.alpha_p),
                std::bit_cast<std::uint64_t>(params.alpha_d)};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  ++solver_runs_;
  const SolveTrace trace =
      pdgmres_solve(entry_->matrix, Vector::Ones(entry_->matrix.rows()),
                    params, window_.tol_min, budget_);
  model_cost_ += total_model_cost(trace, entry_->model);
  const double v = score_trace(trace, entry_->model, window_);
  cache_.emplace(key, v);
  return v;
}

QuadtreeResult aggregate_geomean(
    const std::vector<QuadtreeResult>& per_matrix) {
  if (per_matrix.empty())
    throw std::invalid_argument("aggregate_geomean: empty input");
  const QuadtreeResult& first = per_matrix.front();
  for (const auto& t : per_matrix) {
    if (t.depth != first.depth || t.q.rows() != first.q.rows())
      throw std::invalid_argument("aggregate_geomean: inconsistent shapes");
    if (t.domain.u_lo != first.domain.u_lo ||
        t.domain.u_hi != first.domain.u_hi ||
        t.domain.v_lo != first.domain.v_lo ||
        t.domain.v_hi != first.domain.v_hi)
      throw std::invalid_argument("aggregate_geomean: inconsistent domains");
  }

  std::vector<double> mins;
  mins.reserve(per_matrix.size());
  for (const auto& t : per_matrix) {
    const double m = t.min_value();
    if (!(m < kPenalty))
      throw std::invalid_argument(
          "aggregate_geomean: a tree is entirely penalized");
    if (!(m > 0.0))
      throw std::invalid_argument(
          "aggregate_geomean: normalization requires positive values");
    mins.push_back(m);
  }

  const Index n = first.q.rows();
  QuadtreeResult out;
  out.depth = first.depth;
  out.domain = first.domain;
  out.q = Matrix(n, n);
  out.penalized = BoolGrid(n, n);
  const double inv = 1.0 / static_cast<double>(per_matrix.size());
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      bool bad = false;
      double log_sum = 0.0;
      for (std::size_t i = 0; i < per_matrix.size(); ++i) {
        if (per_matrix[i].penalized(r, c)) {
          bad = true;
          break;
        }
        log_sum += std::log(per_matrix[i].q(r, c) / mins[i]);
      }
      out.penalized(r, c) = bad;
      out.q(r, c) = bad ? kPenalty : std::exp(log_sum * inv);
    }

  // The aggregate's samples are the union of evaluated positions, valued by
  // the aggregated grid, so best_sample() picks an actually evaluated pair.
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (const auto& t : per_matrix)
    for (const auto& s : t.samples) {
      const auto key = std::make_pair(std::bit_cast<std::uint64_t>(s.u),
                                      std::bit_cast<std::uint64_t>(s.v));
      if (!seen.insert(key).second) continue;
      const auto [row, col] = cell_of(out.domain, out.depth, s.u, s.v);
      out.samples.push_back({s.u, s.v, out.q(row, col), s.level});
    }
  return out;
}

PairOutcome optimize_pair(const std::vector<MatrixEntry>& matrices,
                          const PdParams& fixed, PairSpace which,
                          const ParamDomain& domain,
                          const std::vector<ResolutionBudget>& budgets,
                          const TuningConfig& config,
                          std::optional<std::pair<double, double>> carry_best,
                          std::vector<ObjectiveCache*> caches) {
  domain.validate();
  if (matrices.empty()) throw std::invalid_argument("no matrices");
  if (budgets.size() != matrices.size())
    throw std::invalid_argument("one budget per matrix required");

  std::vector<std::unique_ptr<ObjectiveCache>> local;
  if (caches.empty()) {
    for (const auto& entry : matrices)
      local.push_back(std::make_unique<ObjectiveCache>(
          &entry, config.window, config.budget_for(entry.matrix)));
    for (auto& c : local) caches.push_back(c.get());
  }
  if (caches.size() != matrices.size())
    throw std::invalid_argument("one cache per matrix required");

  std::vector<std::pair<double, double>> extra;
  if (carry_best) extra.push_back(*carry_best);

  std::vector<std::future<QuadtreeResult>> futures;
  futures.reserve(matrices.size());
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    ObjectiveCache* cache = caches[i];
    Objective2D obj = [cache, fixed, which](double u, double v) {
      PdParams p = fixed;
      if (which == PairSpace::kAlphas) {
        p.alpha_p = u;
        p.alpha_d = v;
      } else {
        p.m_min = static_cast<int>(std::llround(u));
        p.m_step = static_cast<int>(std::llround(v));
      }
      return cache->value(p);
    };
    futures.push_back(std::async(
        std::launch::async,
        [obj = std::move(obj), &domain, &budgets, i, &extra] {
          return build_quadtree(obj, domain, budgets[i].depth,
                                budgets[i].ratios, extra);
        }));
  }

  PairOutcome out;
  out.per_matrix.reserve(matrices.size());
  for (auto& f : futures) out.per_matrix.push_back(f.get());

  int depth_max = 0;
  for (const auto& t : out.per_matrix) depth_max = std::max(depth_max, t.depth);

  std::vector<QuadtreeResult> usable;
  for (std::size_t i = 0; i < out.per_matrix.size(); ++i) {
    if (out.per_matrix[i].all_penalized()) {
      out.excluded.push_back(i);
      continue;
    }
    usable.push_back(out.per_matrix[i].depth == depth_max
                         ? out.per_matrix[i]
                         : out.per_matrix[i].expanded(depth_max));
  }
  if (usable.empty())
    throw std::runtime_error(
        "optimize_pair: every matrix was penalized on the whole domain");

  out.aggregate = aggregate_geomean(usable);
  const QuadtreeSample& best = out.aggregate.best_sample();
  out.chosen = {best.u, best.v};
  out.chosen_value = best.value;
  return out;
}

BudgetAssignment budget_resolution(const std::vector<MatrixEntry>& matrices,
                                   double time_budget, int probe_points,
                                   const TuningConfig& config) {
  if (matrices.empty()) throw std::invalid_argument("no matrices");
  if (probe_points < 1)
    throw std::invalid_argument("probe_points must be >= 1");

  BudgetAssignment out;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> du(config.alpha_domain.u_lo,
                                            config.alpha_domain.u_hi);
  std::uniform_real_distribution<double> dv(config.alpha_domain.v_lo,
                                            config.alpha_domain.v_hi);
  for (int i = 0; i < probe_points; ++i) {
    const double u = du(rng);
    const double v = dv(rng);
    out.probe_points.emplace_back(u, v);
  }

  const double share = time_budget / static_cast<double>(matrices.size());
  for (const auto& entry : matrices) {
    PdParams params;
    params.m_init = config.m_init_candidates.front();
    params.m_min = config.initial_m_min;
    params.m_step = config.initial_m_step;

    double cost_sum = 0.0;
    for (const auto& [u, v] : out.probe_points) {
      params.alpha_p = u;
      params.alpha_d = v;
      const SolveTrace trace = pdgmres_solve(
          entry.matrix, Vector::Ones(entry.matrix.rows()), params,
          config.window.tol_min, config.budget_for(entry.matrix));
      cost_sum += total_model_cost(trace, entry.model);
    }
    const double mean_cost = cost_sum / static_cast<double>(probe_points);
    out.probe_costs.push_back(mean_cost);

    ResolutionBudget chosen = config.minimum_budget;
    if (mean_cost <= share) {
      for (const auto& tier : config.tiers)
        if (mean_cost * static_cast<double>(tier.planned_evals()) <= share) {
          chosen = tier;
          break;
        }
    }
    out.budgets.push_back(chosen);
  }
  return out;
}

namespace {

ParamDomain halve_around(const ParamDomain& current, const ParamDomain& initial,
                         std::pair<double, double> center) {
  ParamDomain next = current;
  const double wu = (current.u_hi - current.u_lo) / 2.0;
  const double wv = (current.v_hi - current.v_lo) / 2.0;
  double ulo = center.first - wu / 2.0;
  double vlo = center.second - wv / 2.0;
  ulo = std::clamp(ulo, initial.u_lo, initial.u_hi - wu);
  vlo = std::clamp(vlo, initial.v_lo, initial.v_hi - wv);
  next.u_lo = ulo;
  next.u_hi = ulo + wu;
  next.v_lo = vlo;
  next.v_hi = vlo + wv;
  return next;
}

// Geometric mean of the objective across matrices at one parameter set,
// excluding penalized (non-converged) matrices.
double geomean_at(const std::vector<std::unique_ptr<ObjectiveCache>>& caches,
                  const PdParams& params) {
  double log_sum = 0.0;
  int counted = 0;
  for (const auto& cache : caches) {
    const double v = cache->value(params);
    if (v >= kPenalty) continue;
    log_sum += std::log(v);
    ++counted;
  }
  return counted == 0 ? kPenalty
                      : std::exp(log_sum / static_cast<double>(counted));
}

long samples_in(const std::vector<QuadtreeResult>& trees) {
  long n = 0;
  for (const auto& t : trees) n += static_cast<long>(t.samples.size());
  return n;
}

}  // namespace

OptimizationReport run_procedure(const std::vector<MatrixEntry>& matrices,
                                 const TuningConfig& config,
                                 const CacheFactory& cache_factory) {
  config.validate();
  if (matrices.empty())
    throw std::invalid_argument("run_procedure: empty matrix set");

  // Deterministic reduction order: matrices sorted by name.
  std::vector<MatrixEntry> sorted = matrices;
  std::sort(sorted.begin(), sorted.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) {
              return a.name < b.name;
            });

  OptimizationReport report;
  report.config = config;
  for (const auto& e : sorted) report.matrix_names.push_back(e.name);

  if (config.step_cost_budget > 0.0) {
    report.budgets = budget_resolution(sorted, config.step_cost_budget,
                                       config.probe_points, config);
  } else {
    report.budgets.budgets.assign(sorted.size(), config.tiers.front());
    report.budgets.probe_costs.assign(sorted.size(), 0.0);
  }

  std::vector<std::unique_ptr<ObjectiveCache>> caches;
  std::vector<ObjectiveCache*> cache_ptrs;
  for (const auto& entry : sorted) {
    caches.push_back(cache_factory
                         ? cache_factory(entry, config)
                         : std::make_unique<ObjectiveCache>(
                               &entry, config.window,
                               config.budget_for(entry.matrix)));
    cache_ptrs.push_back(caches.back().get());
  }

  auto record_step = [&](int m_init, int cycle, PairSpace space,
                         const ParamDomain& domain, const PairOutcome& out,
                         const PdParams& params_now) {
    StepRecord rec;
    rec.m_init = m_init;
    rec.cycle = cycle;
    rec.space = space;
    rec.domain = domain;
    rec.chosen = out.chosen;
    rec.chosen_value = out.chosen_value;
    for (std::size_t i : out.excluded)
      rec.excluded.push_back(sorted[i].name);
    rec.evaluations = samples_in(out.per_matrix);
    rec.geomean_raw = geomean_at(caches, params_now);
    rec.aggregate = out.aggregate;
    rec.per_matrix = out.per_matrix;
    report.steps.push_back(std::move(rec));
    return report.steps.back().geomean_raw;
  };

  for (int m_init : config.m_init_candidates) {
    PdParams params;
    params.m_init = m_init;
    params.m_min = config.initial_m_min;
    params.m_step = config.initial_m_step;

    ParamDomain alpha_dom = config.alpha_domain;
    ParamDomain m_dom = config.m_domain;
    std::optional<std::pair<double, double>> inc_alpha;
    std::pair<double, double> inc_m{
        static_cast<double>(config.initial_m_min),
        static_cast<double>(config.initial_m_step)};

    CandidateOutcome cand;
    cand.m_init = m_init;
    for (int cycle = 1; cycle <= config.cycles; ++cycle) {
      PairOutcome out_a =
          optimize_pair(sorted, params, PairSpace::kAlphas, alpha_dom,
                        report.budgets.budgets, config, inc_alpha, cache_ptrs);
      params.alpha_p = out_a.chosen.first;
      params.alpha_d = out_a.chosen.second;
      inc_alpha = out_a.chosen;
      cand.trajectory.push_back(
          record_step(m_init, cycle, PairSpace::kAlphas, alpha_dom, out_a,
                      params));

      PairOutcome out_m =
          optimize_pair(sorted, params, PairSpace::kMPair, m_dom,
                        report.budgets.budgets, config, inc_m, cache_ptrs);
      params.m_min = static_cast<int>(std::llround(out_m.chosen.first));
      params.m_step = static_cast<int>(std::llround(out_m.chosen.second));
      inc_m = out_m.chosen;
      cand.trajectory.push_back(record_step(m_init, cycle, PairSpace::kMPair,
                                            m_dom, out_m, params));

      alpha_dom = halve_around(alpha_dom, config.alpha_domain, *inc_alpha);
      m_dom = halve_around(m_dom, config.m_domain, inc_m);
    }

    cand.final_params = params;
    cand.final_geomean = geomean_at(caches, params);
    if (!cand.trajectory.empty() && cand.trajectory.front() > 0.0 &&
        cand.trajectory.front() < kPenalty) {
      const double first = cand.trajectory.front();
      for (double& v : cand.trajectory)
        if (v < kPenalty) v /= first;
    }
    report.candidates.push_back(std::move(cand));
  }

  // Step 7: the candidate with the best full-set geometric mean wins.
  const CandidateOutcome* best = &report.candidates.front();
  for (const auto& c : report.candidates)
    if (c.final_geomean < best->final_geomean) best = &c;
  report.winner = best->final_params;
  report.winner_geomean = best->final_geomean;

  for (std::size_t i = 0; i < sorted.size(); ++i) {
    MatrixTotals t;
    t.name = sorted[i].name;
    t.probe_cost = report.budgets.probe_costs[i];
    for (const auto& step : report.steps)
      t.evaluations +=
          static_cast<long>(step.per_matrix[i].samples.size());
    t.solver_runs = caches[i]->solver_runs();
    t.model_cost = caches[i]->model_cost();
    report.totals.push_back(t);
    report.total_evaluations += t.evaluations;
    report.total_solver_runs += t.solver_runs;
    report.total_model_cost += t.model_cost;
  }
  return report;
}

namespace {

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return out;
}

std::string params_text(const PdParams& p) {
  std::string s = "m_init=" + std::to_string(p.m_init) +
                  " m_min=" + std::to_string(p.m_min) +
                  " m_step=" + std::to_string(p.m_step) +
                  " alpha_p=" + format_double(p.alpha_p) +
                  " alpha_d=" + format_double(p.alpha_d);
  if (p.m_max) s += " m_max=" + std::to_string(*p.m_max);
  return s;
}

}  // namespace

void write_report(const OptimizationReport& report, std::ostream& out) {
  out << "pdgmres tuning report\n";
  out << "=====================\n";
  out << "matrices:";
  for (const auto& n : report.matrix_names) out << ' ' << n;
  out << '\n';
  const auto& c = report.config;
  out << "cycles: " << c.cycles << '\n';
  out << "m_init candidates:";
  for (int m : c.m_init_candidates) out << ' ' << m;
  out << '\n';
  out << "alpha domain: " << format_domain(c.alpha_domain) << '\n';
  out << "m domain: " << format_domain(c.m_domain) << '\n';
  out << "initial m_min/m_step: " << c.initial_m_min << '/' << c.initial_m_step
      << '\n';
  out << "window: tol_max=" << format_double(c.window.tol_max)
      << " tol_min=" << format_double(c.window.tol_min) << '\n';
  out << "seed: " << c.seed << '\n';
  out << "step cost budget: " << format_double(c.step_cost_budget) << '\n';

  if (!report.budgets.probe_points.empty()) {
    out << "probe points:";
    for (const auto& [u, v] : report.budgets.probe_points)
      out << " (" << format_double(u) << ',' << format_double(v) << ')';
    out << '\n';
  }
  out << "\nper-matrix resolution\n";
  for (std::size_t i = 0; i < report.matrix_names.size(); ++i) {
    const auto& b = report.budgets.budgets[i];
    out << "  " << report.matrix_names[i] << ": depth=" << b.depth
        << " ratios=";
    for (std::size_t j = 0; j < b.ratios.size(); ++j) {
      if (j) out << ',';
      out << format_double(b.ratios[j]);
    }
    out << " planned_evals=" << b.planned_evals();
    if (report.budgets.probe_costs[i] > 0.0)
      out << " probe_cost=" << format_double(report.budgets.probe_costs[i]);
    out << '\n';
  }

  out << "\nsteps\n";
  for (const auto& s : report.steps) {
    out << "  m_init=" << s.m_init << " cycle=" << s.cycle
        << " space=" << space_name(s.space)
        << " domain=" << format_domain(s.domain) << " chosen=("
        << format_double(s.chosen.first) << ','
        << format_double(s.chosen.second)
        << ") value=" << format_double(s.chosen_value)
        << " geomean=" << format_double(s.geomean_raw)
        << " evaluations=" << s.evaluations;
    if (!s.excluded.empty()) {
      out << " excluded=";
      for (std::size_t i = 0; i < s.excluded.size(); ++i) {
        if (i) out << ',';
        out << s.excluded[i];
      }
    }
    out << '\n';
  }

  out << "\ncandidates\n";
  for (const auto& cand : report.candidates) {
    out << "  m_init=" << cand.m_init << ": " << params_text(cand.final_params)
        << " geomean=" << format_double(cand.final_geomean) << " trajectory=";
    for (std::size_t i = 0; i < cand.trajectory.size(); ++i) {
      if (i) out << ',';
      out << format_double(cand.trajectory[i]);
    }
    out << '\n';
  }

  out << "\nwinner: " << params_text(report.winner)
      << " geomean=" << format_double(report.winner_geomean) << '\n';

  out << "\nper-matrix totals (evaluations, solver runs, model cost)\n";
  for (const auto& t : report.totals) {
    out << "  " << t.name << ": evaluations=" << t.evaluations
        << " solver_runs=" << t.solver_runs
        << " model_cost=" << format_double(t.model_cost);
    if (t.probe_cost > 0.0)
      out << " probe_cost=" << format_double(t.probe_cost);
    out << '\n';
  }
  out << "  COMBINED: evaluations=" << report.total_evaluations
      << " solver_runs=" << report.total_solver_runs
      << " model_cost=" << format_double(report.total_model_cost) << '\n';
}

void save_report(const OptimizationReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/report.txt");
    if (!f) throw std::runtime_error("cannot write report to " + dir);
    write_report(report, f);
  }
  const std::string steps_dir = dir + "/steps";
  fs::create_directories(steps_dir);
  for (const auto& s : report.steps) {
    const std::string stem = steps_dir + "/minit" + std::to_string(s.m_init) +
                             "_cycle" + std::to_string(s.cycle) + "_" +
                             space_name(s.space);
    render_quadtree(s.aggregate, stem + "_aggregate");
    for (std::size_t i = 0; i < s.per_matrix.size(); ++i)
      render_quadtree(s.per_matrix[i],
                      stem + "_" + sanitize(report.matrix_names[i]));
  }
}

}  // namespace pdg
