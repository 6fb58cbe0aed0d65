#include "pdg/runtime_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

namespace pdg {

RuntimeModel fit_quadratic(const std::vector<int>& dims,
                           const std::vector<double>& costs) {
  if (dims.size() != costs.size())
    throw std::invalid_argument("fit_quadratic: size mismatch");
  if (std::set<int>(dims.begin(), dims.end()).size() < 3)
    throw std::invalid_argument(
        "fit_quadratic: need at least 3 distinct sample dims");

  const Index k = static_cast<Index>(dims.size());
  Matrix vand(k, 3);
  Vector rhs(k);
  for (Index i = 0; i < k; ++i) {
    const double m = dims[static_cast<std::size_t>(i)];
    vand(i, 0) = m * m;
    vand(i, 1) = m;
    vand(i, 2) = 1.0;
    rhs(i) = costs[static_cast<std::size_t>(i)];
  }
  Vector coef = vand.colPivHouseholderQr().solve(rhs);

  RuntimeModel model;
  model.a2 = coef(0);
  model.a1 = coef(1);
  model.a0 = coef(2);
  model.source = RuntimeModel::Source::kMeasured;
  model.floor_value = 1e-12;
  return model;
}

RuntimeModel calibrate(const SparseMat& m, const std::vector<int>& sample_dims,
                       int trials) {
  if (trials < 1) throw std::invalid_argument("calibrate: trials must be >= 1");
  for (int d : sample_dims)
    if (d < 1 || d > m.rows())
      throw std::invalid_argument("calibrate: sample dim " +
                                  std::to_string(d) + " outside [1, n]");

  const Vector b = Vector::Ones(m.rows());
  const Vector x0 = Vector::Zero(m.rows());
  using clock = std::chrono::steady_clock;

  std::vector<double> medians;
  medians.reserve(sample_dims.size());
  for (int d : sample_dims) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      const auto start = clock::now();
      // Tolerance far below reach so the cycle runs all d steps.
      (void)gmres_cycle(m, b, x0, d, 1e-300);
      const auto stop = clock::now();
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2,
                     times.end());
    medians.push_back(times[times.size() / 2]);
  }
  return fit_quadratic(sample_dims, medians);
}

RuntimeModel synthetic_model(const SparseMat& m) {
  RuntimeModel model;
  model.a2 = static_cast<double>(m.rows()) / 2.0;
  model.a1 = static_cast<double>(m.nonZeros());
  model.a0 = 0.0;
  model.source = RuntimeModel::Source::kSynthetic;
  model.floor_value = 1.0;
  return model;
}

namespace {

// Inner-iteration residual sequence with index 0 = initial residual.
double norm_at(const SolveTrace& trace, std::size_t j) {
  return j == 0 ? trace.initial_norm : trace.inner_norms[j - 1];
}

std::vector<std::size_t> in_window_indices(const SolveTrace& trace,
                                           const ToleranceWindow& window) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j <= trace.inner_norms.size(); ++j) {
    const double v = norm_at(trace, j);
    if (v < window.tol_max && v > window.tol_min) idx.push_back(j);
  }
  return idx;
}

}  // namespace

bool window_covered(const SolveTrace& trace, const ToleranceWindow& window) {
  auto idx = in_window_indices(trace, window);
  if (idx.size() < 2) return false;
  double lo = norm_at(trace, idx.front()), hi = lo;
  for (auto j : idx) {
    lo = std::min(lo, norm_at(trace, j));
    hi = std::max(hi, norm_at(trace, j));
  }
  return hi > lo;
}

double averaged_heuristic(const SolveTrace& trace, const RuntimeModel& model,
                          const ToleranceWindow& window) {
  window.validate();
  const auto idx = in_window_indices(trace, window);
  if (idx.size() < 2)
    throw std::invalid_argument(
        "averaged_heuristic: fewer than two residual norms inside the "
        "window");

  double norm_min = norm_at(trace, idx.front());
  double norm_max = norm_min;
  for (auto j : idx) {
    const double v = norm_at(trace, j);
    norm_min = std::min(norm_min, v);
    norm_max = std::max(norm_max, v);
  }
  const double denom = std::log(norm_max / norm_min);
  if (denom == 0.0)
    throw std::invalid_argument(
        "averaged_heuristic: all in-window norms coincide");

  // Cumulative model cost at inner index j: completed cycles cost h(steps),
  // the cycle in progress is truncated at its partial length.
  std::vector<double> cost_prefix(trace.cycle_steps.size() + 1, 0.0);
  std::vector<long> step_prefix(trace.cycle_steps.size() + 1, 0);
  for (std::size_t c = 0; c < trace.cycle_steps.size(); ++c) {
    cost_prefix[c + 1] =
        cost_prefix[c] +
        model.predict(static_cast<double>(trace.cycle_steps[c]));
    step_prefix[c + 1] = step_prefix[c] + trace.cycle_steps[c];
  }
  auto cumulative_cost = [&](std::size_t j) {
    auto it = std::upper_bound(step_prefix.begin(), step_prefix.end(),
                               static_cast<long>(j) - 1);
    const std::size_t cycle =
        static_cast<std::size_t>(it - step_prefix.begin()) - 1;
    const long partial = static_cast<long>(j) - step_prefix[cycle];
    double cost = cost_prefix[cycle];
    if (partial > 0) cost += model.predict(static_cast<double>(partial));
    return cost;
  };

  double acc = 0.0;
  for (std::size_t t = 1; t < idx.size(); ++t) {
    const double weight =
        std::log(norm_at(trace, idx[t - 1]) / norm_at(trace, idx[t])) / denom;
    acc += cumulative_cost(idx[t]) * weight;
  }
  return acc;
}

double total_model_cost(const SolveTrace& trace, const RuntimeModel& model) {
  double cost = 0.0;
  for (Index steps : trace.cycle_steps)
    cost += model.predict(static_cast<double>(steps));
  return cost;
}

double score_trace(const SolveTrace& trace, const RuntimeModel& model,
                   const ToleranceWindow& window) {
  if (!trace.converged) return kPenalty;
  if (!window_covered(trace, window))
    return total_model_cost(trace, model);  // converged before the window
  return averaged_heuristic(trace, model, window);
}

double objective(const SparseMat& m, const PdParams& params,
                 const RuntimeModel& model, const ToleranceWindow& window,
                 IterationBudget budget) {
  window.validate();
  SolveTrace trace = pdgmres_solve(m, Vector::Ones(m.rows()), params,
                                   window.tol_min, budget);
  return score_trace(trace, model, window);
}

void save_model(const RuntimeModel& model, const std::string& matrix_name,
                const std::string& path) {
  nlohmann::json j;
  j["matrix"] = matrix_name;
  j["source"] = model.source == RuntimeModel::Source::kMeasured ? "measured"
                                                                : "synthetic";
  j["a2"] = model.a2;
  j["a1"] = model.a1;
  j["a0"] = model.a0;
  j["floor"] = model.floor_value;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open model file: " + path);
  f << j.dump(2) << '\n';
}

std::pair<RuntimeModel, std::string> load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  f >> j;
  RuntimeModel model;
  model.a2 = j.at("a2").get<double>();
  model.a1 = j.at("a1").get<double>();
  model.a0 = j.at("a0").get<double>();
  model.floor_value = j.at("floor").get<double>();
  model.source = j.at("source").get<std::string>() == "measured"
                     ? RuntimeModel::Source::kMeasured
                     : RuntimeModel::Source::kSynthetic;
  return {model, j.at("matrix").get<std::string>()};
}

}  // namespace pdg
