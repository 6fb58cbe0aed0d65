#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "pdg/gallery.hpp"
#include "pdg/krylov.hpp"
#include "test_util.hpp"

using namespace pdg;

TEST_CASE("gmres_cycle: identity converges in one step") {
  SparseMat m = identity_matrix(5);
  Vector b = Vector::Ones(5);
  CycleResult res = gmres_cycle(m, b, Vector::Zero(5), 5, 1e-12);
  CHECK(res.converged);
  CHECK(res.steps_taken == 1);
  CHECK((res.x_new - b).norm() <= 1e-12);
  CHECK(true_residual_norm(m, b, res.x_new) <= 1e-12);
}

TEST_CASE("gmres_cycle: full-dimension cycle matches direct elimination") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix dense = test::random_conditioned(10, 50.0, rng);
    SparseMat m = test::dense_to_sparse(dense);
    Vector b = test::random_vector(10, rng);
    Vector x_direct = Eigen::PartialPivLU<Matrix>(dense).solve(b);
    CycleResult res = gmres_cycle(m, b, Vector::Zero(10), 10, 1e-14);
    CHECK((res.x_new - x_direct).norm() <= 1e-10 * x_direct.norm());
  }
}

TEST_CASE("gmres_cycle: one step solves the 1-d least squares problem") {
  std::vector<Triplet> ts{{0, 0, 3.0}, {1, 1, 4.0}};
  SparseMat m = from_triplets(2, ts);
  Vector b(2);
  b << 1, 1;
  CycleResult res = gmres_cycle(m, b, Vector::Zero(2), 1, 1e-300);
  // Minimize ||b - alpha*Mb|| over alpha directly.
  Vector mb = m * b;
  const double alpha = b.dot(mb) / mb.squaredNorm();
  const double want = (b - alpha * mb).norm();
  REQUIRE(res.steps_taken == 1);
  CHECK(res.inner_residual_norms[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(true_residual_norm(m, b, res.x_new) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("gmres_cycle: zero right-hand side returns immediately") {
  SparseMat m = identity_matrix(4);
  CycleResult res = gmres_cycle(m, Vector::Zero(4), Vector::Zero(4), 4, 1e-12);
  CHECK(res.converged);
  CHECK(res.steps_taken == 0);
}

TEST_CASE("gmres_cycle: implicit residuals never increase within a cycle") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 6 + static_cast<Index>(rng() % 59);
    SparseMat m = test::dense_to_sparse(
        test::random_conditioned(n, 100.0, rng));
    Vector b = test::random_vector(n, rng);
    CycleResult res =
        gmres_cycle(m, b, Vector::Zero(n), std::min<Index>(n, 20), 1e-14);
    for (std::size_t i = 1; i < res.inner_residual_norms.size(); ++i)
      CHECK(res.inner_residual_norms[i] <=
            res.inner_residual_norms[i - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("gmres_cycle: implicit residual agrees with the true residual") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 8 + static_cast<Index>(rng() % 57);
    SparseMat m = test::dense_to_sparse(
        test::random_conditioned(n, 1000.0, rng));
    Vector b = test::random_vector(n, rng);
    CycleResult res =
        gmres_cycle(m, b, Vector::Zero(n), std::min<Index>(n, 15), 1e-14);
    const double implied = res.inner_residual_norms.back();
    const double truth = true_residual_norm(m, b, res.x_new);
    CHECK(std::abs(implied - truth) <= 1e-8 * (1.0 + b.norm()));
  }
}

TEST_CASE("gmres_cycle: Arnoldi basis stays orthonormal") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 10 + static_cast<Index>(rng() % 55);
    SparseMat m = test::dense_to_sparse(
        test::random_conditioned(n, 1000.0, rng));
    Vector b = test::random_vector(n, rng);
    Matrix basis;
    gmres_cycle(m, b, Vector::Zero(n), std::min<Index>(n, 12), 1e-300, {},
                &basis);
    const Matrix gram = basis.transpose() * basis;
    CHECK((gram - Matrix::Identity(gram.rows(), gram.cols()))
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
  }
}

TEST_CASE("gmres_cycle: dimension and argument errors") {
  SparseMat m = identity_matrix(3);
  CHECK_THROWS_AS(gmres_cycle(m, Vector::Ones(4), Vector::Zero(3), 3, 1e-9),
                  std::invalid_argument);
  CHECK_THROWS_AS(gmres_cycle(m, Vector::Ones(3), Vector::Zero(3), 0, 1e-9),
                  std::invalid_argument);
  CHECK_THROWS_AS(gmres_cycle(m, Vector::Ones(3), Vector::Zero(3), 3, 0.0),
                  std::invalid_argument);
}

TEST_CASE("gmres_restarted: identity converges with one inner iteration") {
  SparseMat m = identity_matrix(6);
  for (int restart : {1, 3, 6}) {
    SolveTrace trace = gmres_restarted(m, Vector::Ones(6), restart, 1e-10,
                                       IterationBudget::for_dim(6));
    CHECK(trace.converged);
    CHECK(trace.total_inner_iterations == 1);
    REQUIRE(trace.restart_params.size() == 1);
    CHECK(trace.restart_params[0] == std::min(restart, 6));
  }
}

TEST_CASE("gmres_restarted: 2d laplacian with small restart") {
  SparseMat m = laplacian_2d(4);  // 16 unknowns
  Vector b = Vector::Ones(16);
  SolveTrace trace =
      gmres_restarted(m, b, 4, 1e-9, IterationBudget::for_dim(16));
  CHECK(trace.converged);
  CHECK(trace.final_residual_norm() <= 1e-9);

  // Residuals non-increasing within each cycle.
  std::size_t pos = 0;
  for (Index steps : trace.cycle_steps) {
    for (Index s = 1; s < steps; ++s)
      CHECK(trace.inner_norms[pos + s] <=
            trace.inner_norms[pos + s - 1] * (1.0 + 1e-12));
    pos += static_cast<std::size_t>(steps);
  }
}

TEST_CASE("gmres_restarted: stagnating instance found by search") {
  // Search small rotations for one whose first Krylov direction is
  // orthogonal to the right-hand side: GMRES(1) cannot make progress there.
  Vector b(2);
  b << 1, 0;
  bool found = false;
  SparseMat stagnating;
  for (int k = 1; k < 8 && !found; ++k) {
    const double theta = k * 3.14159265358979323846 / 8.0;
    Matrix rot(2, 2);
    rot << std::cos(theta), -std::sin(theta), std::sin(theta),
        std::cos(theta);
    Vector mb = rot * b;
    if (std::abs(b.dot(mb)) < 1e-12) {  // one-step stagnation certificate
      stagnating = test::dense_to_sparse(rot);
      found = true;
    }
  }
  REQUIRE(found);
  SolveTrace trace =
      gmres_restarted(stagnating, b, 1, 1e-9, IterationBudget{1000});
  CHECK_FALSE(trace.converged);
}

TEST_CASE("true_residual_norm") {
  SparseMat m = identity_matrix(3);
  Vector b(3);
  b << 1, 2, 2;
  CHECK(true_residual_norm(m, b, b) <= 1e-12);          // exact solution
  CHECK(true_residual_norm(m, b, Vector::Zero(3)) == b.norm());

  std::mt19937_64 rng(37);
  SparseMat r = test::random_sparse(9, 30, rng);
  Vector x = test::random_vector(9, rng);
  Vector rb = test::random_vector(9, rng);
  const double want = (rb - Matrix(r) * x).norm();
  CHECK(true_residual_norm(r, rb, x) == doctest::Approx(want).epsilon(1e-13));

  CHECK_THROWS_AS(true_residual_norm(r, rb, Vector::Ones(4)),
                  std::invalid_argument);
}

TEST_CASE("gmres_restarted: ilu0-style right preconditioner hook") {
  // Any contraction works as a preconditioner here; use diagonal scaling.
  SparseMat m = laplacian_2d(4);
  Vector diag = Matrix(m).diagonal();
  PrecondFn jacobi = [diag](const Vector& v) -> Vector {
    return v.cwiseQuotient(diag);
  };
  SolveTrace plain =
      gmres_restarted(m, Vector::Ones(16), 4, 1e-9, IterationBudget::for_dim(16));
  SolveTrace precond = gmres_restarted(m, Vector::Ones(16), 4, 1e-9,
                                       IterationBudget::for_dim(16), jacobi);
  CHECK(precond.converged);
  // Reported residuals are residuals of the original system.
  CHECK(precond.final_residual_norm() <= 1e-9);
  CHECK(plain.converged);
}
