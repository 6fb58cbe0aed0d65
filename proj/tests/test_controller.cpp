#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pdg/controller.hpp"
#include "pdg/gallery.hpp"
#include "test_util.hpp"

using namespace pdg;

namespace {

ControllerState state_for(int j, int m_current, std::vector<double> norms,
                          int reset_counter = 0, double carry = 0.0) {
  ControllerState s;
  s.restart_index = j;
  s.m_current = m_current;
  s.reset_counter = reset_counter;
  s.carry = carry;
  // norms given oldest first
  for (double n : norms) s.push_norm(n);
  return s;
}

// Replays the recorded restart-boundary norms through next_restart and
// checks the recorded restart parameters come out unchanged.
void check_replay(const SolveTrace& trace, const PdParams& params, Index n) {
  ControllerState state;
  state.push_norm(trace.initial_norm);
  for (std::size_t j = 0; j < trace.restart_params.size(); ++j) {
    auto [candidate, next] = next_restart(state, params);
    const int m_used = static_cast<int>(std::min<Index>(candidate, n));
    CHECK(m_used == trace.restart_params[j]);
    next.m_current = m_used;
    state = next;
    if (j < trace.restart_norms.size()) state.push_norm(trace.restart_norms[j]);
  }
}

}  // namespace

TEST_CASE("proportional term") {
  CHECK(proportional_term(-3.0, 2.0, 2.0) == -3.0);          // stagnation
  CHECK(proportional_term(-0.625, 1.0, 2.0) == -0.3125);
  CHECK(proportional_term(0.0, 5.0, 1.0) == 0.0);
  CHECK_THROWS_AS(proportional_term(-3.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("derivative term") {
  CHECK(derivative_term(9.0, 4.0, 2.0, 4.0) == 0.0);         // stagnation
  CHECK(derivative_term(9.0, 1.0, 2.0, 5.0) == -9.0);
  CHECK(derivative_term(0.0, 1.0, 2.0, 7.0) == 0.0);
  CHECK_THROWS_AS(derivative_term(9.0, 1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("next_restart: j = 0 returns m_init") {
  PdParams p{30, 1, 3, -3.0, 9.0, std::nullopt};
  auto [m, s] = next_restart(state_for(0, 0, {1.0}), p);
  CHECK(m == 30);
  CHECK(s.restart_index == 1);
  CHECK(s.reset_counter == 0);
}

TEST_CASE("next_restart: stagnation decreases by |floor(alpha_p)|") {
  PdParams p{30, 1, 3, -3.0, 9.0, std::nullopt};
  auto [m, s] = next_restart(state_for(2, 30, {1.0, 1.0, 1.0}), p);
  CHECK(m == 27);  // P = -3, D = 0
  CHECK(s.carry == 0.0);
}

TEST_CASE("next_restart: reset branch") {
  PdParams p{10, 3, 5, -3.0, 9.0, std::nullopt};
  auto [m, s] = next_restart(state_for(2, 3, {1.0, 1.0, 1.0}), p);
  // candidate 3 + floor(-3) = 0 < 3, c 0 -> 1
  CHECK(m == 15);
  CHECK(s.reset_counter == 1);
}

TEST_CASE("next_restart: reset fires at j = 0 when m_init < m_min") {
  PdParams p{10, 12, 5, -3.0, 9.0, std::nullopt};
  auto [m, s] = next_restart(state_for(0, 0, {1.0}), p);
  CHECK(m == 15);  // m_init + 1*m_step
  CHECK(s.reset_counter == 1);
}

TEST_CASE("next_restart: extended reset with m_max") {
  PdParams p{30, 38, 230, -3.0, 9.0, 250};
  // stagnation: candidate 40 - 3 = 37 < 38 -> c=1 -> 30 + 230 = 260 > 250
  auto [m, s] = next_restart(state_for(2, 40, {1.0, 1.0, 1.0}, 0), p);
  CHECK(m == 30);        // re-initialized to m_init
  CHECK(s.reset_counter == 0);  // counter re-initialized
}

TEST_CASE("next_restart: carry is stored and re-added for alpha_p > 0") {
  // Pre-floor sum 0.6 at j = 1 (P only), then 0.6 again at j = 2 (alpha_d=0).
  const double ratio = 0.6 / 22.5;
  PdParams p{10, 1, 3, 22.5, 0.0, std::nullopt};
  auto [m1, s1] = next_restart(state_for(1, 10, {1.0, ratio}), p);
  CHECK(m1 == 10);  // floor(0.6) = 0
  CHECK(s1.carry == doctest::Approx(0.6).epsilon(1e-12));

  s1.push_norm(ratio * ratio);  // keeps ||r_j||/||r_{j-1}|| = ratio
  auto [m2, s2] = next_restart(s1, p);
  CHECK(m2 == 11);  // 0.6 + 0.6 = 1.2 floors to 1
  CHECK(s2.carry == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("next_restart: no carry for alpha_p <= 0") {
  PdParams p{10, 1, 3, -0.5, 0.25, std::nullopt};
  ControllerState s = state_for(2, 10, {1.0, 0.9, 0.7});
  for (int step = 0; step < 5; ++step) {
    auto [m, next] = next_restart(s, p);
    CHECK(next.carry == 0.0);
    next.m_current = m;
    s = next;
    s.push_norm(s.recent_norms[0] * 0.8);
  }
}

TEST_CASE("preset values") {
  PdParams d = preset(PresetName::kDefault);
  CHECK(d.m_init == 30);
  CHECK(d.m_min == 1);
  CHECK(d.m_step == 3);
  CHECK(d.alpha_p == -3.0);
  CHECK(d.alpha_d == 9.0);

  PdParams o = preset("optimized");
  CHECK(o.m_init == 10);
  CHECK(o.m_min == 3);
  CHECK(o.m_step == 10);
  CHECK(o.alpha_p == -0.625);
  CHECK(o.alpha_d == 4.375);

  PdParams s = preset("specialized");
  CHECK(s.m_init == 30);
  CHECK(s.m_min == 33);
  CHECK(s.m_step == 39);
  CHECK(s.alpha_p == -42.5);
  CHECK(s.alpha_d == 0.0);

  PdParams pt = preset("problematic-test");
  CHECK(pt.m_init == 50);
  CHECK(pt.m_min == 51);
  CHECK(pt.m_step == 76);
  CHECK(pt.alpha_p == -41.25);
  CHECK(pt.alpha_d == 29.375);

  CHECK_THROWS_AS(preset("nope"), std::invalid_argument);
}

TEST_CASE("params validation") {
  PdParams bad{0, 1, 1, -1.0, 1.0, std::nullopt};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  PdParams bad_max{30, 1, 3, -3.0, 9.0, 20};
  CHECK_THROWS_AS(bad_max.validate(), std::invalid_argument);
}

TEST_CASE("pdgmres_solve: identity converges in the first cycle") {
  SparseMat m = identity_matrix(8);
  for (const char* name : {"default", "optimized"}) {
    SolveTrace trace = pdgmres_solve(m, Vector::Ones(8), preset(name), 1e-10,
                                     IterationBudget::for_dim(8));
    CHECK(trace.converged);
    REQUIRE(trace.restart_params.size() == 1);
    CHECK(trace.restart_params[0] ==
          std::min<int>(preset(name).m_init, 8));  // clamped to n
  }
}

TEST_CASE("pdgmres_solve: trace replay reproduces restart parameters") {
  SparseMat m = laplacian_2d(10);  // n = 100
  PdParams params = preset(PresetName::kOptimized);
  SolveTrace trace = pdgmres_solve(m, Vector::Ones(100), params, 1e-9,
                                   IterationBudget::for_dim(100));
  CHECK(trace.converged);
  CHECK(trace.restart_params.size() >= 2);
  check_replay(trace, params, 100);
}

TEST_CASE("pdgmres_solve: zigzag pattern of decreasing runs and jumps") {
  // Slow enough that many restarts happen before convergence.
  SparseMat m = laplacian_2d(20);  // n = 400
  PdParams params{10, 3, 7, -1.0, 1.0, std::nullopt};
  SolveTrace trace = pdgmres_solve(m, Vector::Ones(400), params, 1e-9,
                                   IterationBudget::for_dim(400));
  REQUIRE(trace.restart_params.size() >= 5);

  int jumps_seen = 0;
  int c = 0;
  for (std::size_t j = 1; j < trace.restart_params.size(); ++j) {
    const int prev = trace.restart_params[j - 1];
    const int cur = trace.restart_params[j];
    if (cur > prev) {
      // A jump must land exactly on m_init + c*m_step (clamped to n).
      ++c;
      ++jumps_seen;
      CHECK(cur == std::min<int>(params.m_init + c * params.m_step, 400));
    } else {
      CHECK(cur <= prev - 1);  // strictly decreasing run
    }
  }
  CHECK(jumps_seen >= 1);
  CHECK(trace.resets == c);
}

TEST_CASE("pdgmres_solve: proposition 1 regime decreases m off-reset") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ap(-5.0, -0.1);
  std::uniform_real_distribution<double> ad(0.0, 5.0);
  std::uniform_int_distribution<int> mi(1, 20), mm(1, 5), ms(1, 10);

  for (int rep = 0; rep < 200; ++rep) {
    PdParams p{mi(rng), mm(rng), ms(rng), ap(rng), ad(rng), std::nullopt};
    // Random non-increasing positive norm sequence, as produced by GMRES.
    ControllerState s;
    double norm = 1.0;
    s.push_norm(norm);
    auto [m0, s0] = next_restart(s, p);
    s = s0;
    s.m_current = m0;
    for (int j = 1; j <= 12; ++j) {
      std::uniform_real_distribution<double> shrink(0.2, 1.0);
      norm *= shrink(rng);
      s.push_norm(norm);
      const int m_before = s.m_current;
      const int c_before = s.reset_counter;
      auto [m_next, s_next] = next_restart(s, p);
      if (s_next.reset_counter == c_before)  // reset branch did not fire
        CHECK(m_next <= m_before - 1);
      s = s_next;
    }
  }
}

TEST_CASE("pdgmres_solve: proposition 1 convergence bound at desk scale") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> ap(-4.0, -0.5);
  std::uniform_real_distribution<double> ad(0.0, 4.0);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 3 + static_cast<Index>(rng() % 10);  // up to 12
    SparseMat m =
        test::dense_to_sparse(test::random_conditioned(n, 100.0, rng));
    PdParams p{1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 3),
               1 + static_cast<int>(rng() % 4), ap(rng), ad(rng),
               std::nullopt};
    SolveTrace trace = pdgmres_solve(m, Vector::Ones(n), p, 1e-8,
                                     IterationBudget::unlimited());
    CHECK(trace.converged);
    CHECK(trace.restart_params.size() <=
          static_cast<std::size_t>(n * (n + 1) / 2));
  }
}

TEST_CASE("pdgmres_solve: proposition 2 identity for positive coefficients") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> coef(0.1, 40.0);
  std::uniform_real_distribution<double> scale(1e-6, 1e3);
  std::uniform_real_distribution<double> mid(0.2, 5.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double alpha_p = coef(rng);
    const double alpha_d = coef(rng);
    const double r_j = scale(rng);
    const double r_jm1 = mid(rng) * r_j;
    const double r_jm2 = r_j * (1.0 + 2.0 * alpha_p / alpha_d);
    const double sum = proportional_term(alpha_p, r_j, r_jm1) +
                       derivative_term(alpha_d, r_j, r_jm1, r_jm2);
    CHECK(std::abs(sum) <= 1e-12);
  }
}

TEST_CASE("pdgmres_solve: m_max bounds every restart parameter") {
  SparseMat m = laplacian_2d(20);  // n = 400
  PdParams p{30, 10, 20, -10.0, 10.0, 60};
  SolveTrace trace = pdgmres_solve(m, Vector::Ones(400), p, 1e-9,
                                   IterationBudget::for_dim(400));
  for (int used : trace.restart_params) {
    CHECK(used >= 1);
    CHECK(used <= 60);
  }
  check_replay(trace, p, 400);
}

TEST_CASE("pdgmres_solve: divergence is signalled") {
  // A matrix with a huge off-diagonal produces overflow long before the
  // budget runs out when paired with an absurd iterate; instead check the
  // plumbing with non-finite input.
  std::vector<Triplet> ts{{0, 0, 1.0}, {1, 1, 1.0}};
  SparseMat m = from_triplets(2, ts);
  Vector b(2);
  b << std::numeric_limits<double>::infinity(), 1.0;
  CHECK_THROWS_AS(pdgmres_solve(m, b, preset("default"), 1e-9,
                                IterationBudget::for_dim(2)),
                  DivergenceError);
}
