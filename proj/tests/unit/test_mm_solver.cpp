#include <gtest/gtest.h>

#include <random>

#include "lrcox/errors.hpp"
#include "lrcox/mm_solver.hpp"
#include "oracles.hpp"

using namespace lrcox;

TEST(MMUpdate, SolvesTheSurrogateNormalEquations) {
  std::mt19937_64 gen(31);
  const auto pop = oracle::random_population(gen, 15, 4);
  const Vector b = oracle::random_matrix(gen, 4, 1, 0.3);
  const Vector target = oracle::random_matrix(gen, 4, 1);
  const double rho = 2.0, mu = 0.1;
  const Vector next = mm_update_population(pop, b, target, rho, mu, HessianMode::TaylorDiagonal);
  const Vector eta = pop.covariates() * b;
  const auto d = population_derivatives(pop, eta, TieMode::StandardBreslow);
  const Vector w = d.hessian_diag.cwiseMax(1e-10);
  const Matrix& X = pop.covariates();
  // Stationarity of the quadratic surrogate plus penalties at `next`.
  const Vector grad = X.transpose() * (d.gradient + w.cwiseProduct(X * (next - b))) + mu * next +
                      rho * (next - target) + rho * next;
  EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MMUpdate, WoodburyPathMatchesDirect) {
  std::mt19937_64 gen(32);
  const auto pop = oracle::random_population(gen, 8, 20);
  const Vector b = oracle::random_matrix(gen, 20, 1, 0.1);
  const Vector target = oracle::random_matrix(gen, 20, 1);
  for (auto mode : {HessianMode::TaylorDiagonal, HessianMode::UniformBound}) {
    const Vector a = mm_update_population(pop, b, target, 1.5, 0.1, mode, 0.0, TieMode::StandardBreslow,
                                          RidgePath::Direct);
    const Vector c = mm_update_population(pop, b, target, 1.5, 0.1, mode, 0.0, TieMode::StandardBreslow,
                                          RidgePath::Woodbury);
    EXPECT_LT((a - c).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(InnerSolve, UniformBoundIsMonotone) {
  std::mt19937_64 gen(33);
  const auto data = oracle::random_dataset(gen, 3, 25, 6);
  FitConfig cfg;
  cfg.constraints = {1, 3};
  cfg.hessian_mode = HessianMode::UniformBound;
  cfg.k_max = 40;
  cfg.obj_tol = 0.0;
  const auto res = mm_inner_solve(data, cfg, Matrix::Zero(6, 3), 5.0);
  double prev = res.initial_objective;
  for (const auto& e : res.trace) {
    EXPECT_LE(e.objective, prev + 1e-10);
    prev = e.objective;
  }
  EXPECT_NEAR(res.trace.back().objective,
              penalty_objective(data, res.estimate, cfg.mu, 5.0, cfg.constraints, cfg.tie_mode), 1e-10);
}

TEST(InnerSolve, ZeroIterationsReturnsInit) {
  std::mt19937_64 gen(34);
  const auto data = oracle::random_dataset(gen, 2, 10, 3);
  FitConfig cfg;
  cfg.constraints = {1, 2};
  cfg.k_max = 0;
  const Matrix B0 = oracle::random_matrix(gen, 3, 2);
  const auto res = mm_inner_solve(data, cfg, B0, 1.0);
  EXPECT_TRUE(res.trace.empty());
  EXPECT_EQ((res.estimate - B0).norm(), 0.0);
}

TEST(Fit, FeasibleEstimateRespectsBounds) {
  std::mt19937_64 gen(35);
  const auto data = oracle::random_dataset(gen, 4, 40, 8);
  FitConfig cfg;
  cfg.constraints = {2, 3};
  const auto res = fit(data, cfg);
  EXPECT_EQ(res.termination, Termination::FeasibilityMet);
  EXPECT_LT(res.dist_rank, cfg.feas_tol);
  EXPECT_LT(res.dist_rows, cfg.feas_tol);
  EXPECT_LE(count_nonzero_rows(res.estimate), 3);
  EXPECT_LE(res.factorization.rank(), 2);
  EXPECT_LT((res.factorization.reconstruct() - res.estimate).norm(), 1e-10);
  EXPECT_EQ(res.support, row_support(res.estimate));
  EXPECT_NEAR(res.projection_change, (res.estimate - res.unprojected).norm(), 1e-12);
}

TEST(Fit, RhoCapIsReported) {
  std::mt19937_64 gen(36);
  const auto data = oracle::random_dataset(gen, 3, 30, 5);
  FitConfig cfg;
  cfg.constraints = {1, 1};
  cfg.max_rho_steps = 1;
  cfg.rho0 = 1e-3;
  const auto res = fit(data, cfg);
  EXPECT_EQ(res.termination, Termination::RhoCapHit);
  EXPECT_EQ(res.rho_steps, 1);
  EXPECT_LE(count_nonzero_rows(res.estimate), 1);
}

TEST(Fit, UnconstrainedMatchesRidgeOracle) {
  std::mt19937_64 gen(37);
  const auto data = oracle::random_dataset(gen, 2, 30, 3);
  FitConfig cfg;
  cfg.constraints = {2, 3};
  cfg.mu = 0.5;
  cfg.k_max = 500;
  cfg.obj_tol = 1e-15;
  const auto res = fit(data, cfg);
  for (int j = 0; j < 2; ++j) {
    const auto& pop = data.population(j);
    const Vector b = oracle::ridge_cox(pop.time(), pop.status(), pop.covariates(), cfg.mu);
    EXPECT_LT((res.estimate.col(j) - b).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Fit, DeterministicAcrossCalls) {
  std::mt19937_64 gen(38);
  const auto data = oracle::random_dataset(gen, 3, 20, 6);
  FitConfig cfg;
  cfg.constraints = {1, 2};
  const auto a = fit(data, cfg);
  const auto b = fit(data, cfg);
  EXPECT_EQ((a.estimate - b.estimate).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FitConfig, ValidateListsAllProblems) {
  FitConfig cfg;
  cfg.mu = -1.0;
  cfg.incr_factor = 1.0;
  cfg.constraints = {0, 0};
  try {
    cfg.validate(5, 3);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("mu"), std::string::npos);
    EXPECT_NE(msg.find("incr"), std::string::npos);
    EXPECT_NE(msg.find("rank"), std::string::npos);
  }
}

TEST(FitPath, WarmStartsAndRejectsIncreasingRanks) {
  std::mt19937_64 gen(39);
  const auto data = oracle::random_dataset(gen, 3, 25, 6);
  FitConfig cfg;
  const auto cells = fit_path(data, cfg, {2, 4}, {3, 2, 1});
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& c : cells) {
    ASSERT_TRUE(c.result.has_value()) << c.error;
    EXPECT_LE(count_nonzero_rows(c.result->estimate), c.s);
    EXPECT_LE(c.result->factorization.rank(), c.r);
  }
  EXPECT_THROW(fit_path(data, cfg, {2}, {1, 2}), ConfigError);
}
