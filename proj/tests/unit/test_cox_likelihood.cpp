#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/errors.hpp"
#include "oracles.hpp"

using namespace lrcox;

namespace {

Population tiny() {
  Vector t(4);
  t << 3.0, 1.0, 2.0, 2.0;
  Matrix X(4, 1);
  X << 0.5, -1.0, 0.2, 1.5;
  return Population("tiny", t, {1, 1, 1, 0}, X);
}

}  // namespace

TEST(Population, OrdersDescendingAndGroupsTies) {
  const auto pop = tiny();
  const auto& order = pop.order();
  ASSERT_EQ(order.size(), 4u);
  EXPECT_EQ(order[0], 0);
  EXPECT_EQ(order[1], 2);
  EXPECT_EQ(order[2], 3);
  EXPECT_EQ(order[3], 1);
  ASSERT_EQ(pop.groups().size(), 3u);
  EXPECT_EQ(pop.groups()[1].events, 1);
  EXPECT_EQ(pop.groups()[1].end - pop.groups()[1].begin, 2);
  EXPECT_EQ(pop.tie_count(2), 1);
  EXPECT_EQ(pop.event_count(), 3);
}

TEST(Population, RejectsBadInput) {
  Matrix X = Matrix::Zero(2, 1);
  Vector t(2);
  t << 1.0, -1.0;
  EXPECT_THROW(Population("p", t, {1, 1}, X), DataError);
  t << 1.0, 2.0;
  EXPECT_THROW(Population("p", t, {1, 2}, X), DataError);
  EXPECT_THROW(Population("p", t, {1}, X), DataError);
}

TEST(Population, SubsetKeepsRows) {
  const auto pop = tiny();
  const std::vector<Eigen::Index> keep{3, 0};
  const auto sub = pop.subset(keep);
  ASSERT_EQ(sub.size(), 2);
  EXPECT_EQ(sub.time()(0), 2.0);
  EXPECT_EQ(sub.status()[0], 0);
  EXPECT_EQ(sub.covariates()(1, 0), 0.5);
}

TEST(Loglik, MatchesBruteForceBothTieModes) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto pop = oracle::random_population(gen, 30, 3, trial % 2 == 0 ? 4 : 0);
    const Vector eta = oracle::random_matrix(gen, 30, 1);
    EXPECT_NEAR(population_loglik(pop, eta, TieMode::StandardBreslow),
                oracle::loglik(pop.time(), pop.status(), eta, false), 1e-10);
    EXPECT_NEAR(population_loglik(pop, eta, TieMode::LiteralPaper),
                oracle::loglik(pop.time(), pop.status(), eta, true), 1e-10);
  }
}

TEST(Loglik, TieModesAgreeWithoutTies) {
  std::mt19937_64 gen(22);
  const auto pop = oracle::random_population(gen, 40, 2);
  const Vector eta = oracle::random_matrix(gen, 40, 1);
  EXPECT_NEAR(population_loglik(pop, eta, TieMode::StandardBreslow), population_loglik(pop, eta, TieMode::LiteralPaper),
              1e-12);
}

TEST(Loglik, StableForLargePredictors) {
  std::mt19937_64 gen(23);
  const auto pop = oracle::random_population(gen, 20, 2);
  const Vector eta = oracle::random_matrix(gen, 20, 1);
  const Vector shifted = eta.array() + 800.0;
  const double a = population_loglik(pop, eta, TieMode::StandardBreslow);
  const double b = population_loglik(pop, shifted, TieMode::StandardBreslow);
  EXPECT_TRUE(std::isfinite(b));
  EXPECT_NEAR(a, b, 1e-8);
}

TEST(Derivatives, GradientAndHessianDiagMatchFiniteDifferences) {
  std::mt19937_64 gen(24);
  for (auto mode : {TieMode::StandardBreslow, TieMode::LiteralPaper}) {
    const auto pop = oracle::random_population(gen, 25, 2, 3);
    const Vector eta = oracle::random_matrix(gen, 25, 1, 0.5);
    const auto d = population_derivatives(pop, eta, mode);
    EXPECT_NEAR(d.value, -population_loglik(pop, eta, mode), 1e-12);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      Vector up = eta, dn = eta;
      up(i) += h;
      dn(i) -= h;
      const double fu = -population_loglik(pop, up, mode);
      const double fd = -population_loglik(pop, dn, mode);
      EXPECT_NEAR(d.gradient(i), (fu - fd) / (2 * h), 1e-7);
      const double gu = population_derivatives(pop, up, mode).gradient(i);
      const double gd = population_derivatives(pop, dn, mode).gradient(i);
      EXPECT_NEAR(d.hessian_diag(i), (gu - gd) / (2 * h), 1e-6);
    }
  }
}

TEST(Derivatives, BSpaceGradientMatchesOracle) {
  std::mt19937_64 gen(25);
  const auto data = oracle::random_dataset(gen, 2, 20, 3, 3);
  const Matrix B = oracle::random_matrix(gen, 3, 2, 0.3);
  double value = 0.0;
  const Matrix G = neg_loglik_gradient(data, B, TieMode::StandardBreslow, &value);
  EXPECT_NEAR(value, -partial_loglik(data, B, TieMode::StandardBreslow), 1e-12);
  for (int j = 0; j < 2; ++j) {
    Vector g;
    Matrix H;
    const auto& pop = data.population(j);
    oracle::derivatives_b(pop.time(), pop.status(), pop.covariates(), B.col(j), false, g, H);
    EXPECT_LT((G.col(j) - g).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(HessianBound, DominatesDiagonalAndEigenvalues) {
  std::mt19937_64 gen(26);
  for (auto mode : {TieMode::StandardBreslow, TieMode::LiteralPaper}) {
    const auto pop = oracle::random_population(gen, 15, 1, 3);
    const double bound = hessian_eigen_bound(pop, mode);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector eta = oracle::random_matrix(gen, 15, 1, 2.0);
      // Dense eta-space Hessian by finite differences of the analytic gradient.
      Matrix H(15, 15);
      const double h = 1e-6;
      for (int i = 0; i < 15; ++i) {
        Vector up = eta, dn = eta;
        up(i) += h;
        dn(i) -= h;
        H.col(i) = (population_derivatives(pop, up, mode).gradient - population_derivatives(pop, dn, mode).gradient) /
                   (2 * h);
      }
      const Matrix sym = 0.5 * (H + H.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
      EXPECT_LE(eig.eigenvalues().maxCoeff(), bound + 1e-6);
    }
  }
}

TEST(Dataset, PenalizedObjectiveAddsHalfMuNorm) {
  std::mt19937_64 gen(27);
  const auto data = oracle::random_dataset(gen, 3, 10, 2);
  const Matrix B = oracle::random_matrix(gen, 2, 3);
  EXPECT_NEAR(penalized_objective(data, B, 0.4, TieMode::StandardBreslow),
              -partial_loglik(data, B, TieMode::StandardBreslow) + 0.2 * B.squaredNorm(), 1e-12);
}

TEST(Dataset, RejectsMismatchedPredictors) {
  std::mt19937_64 gen(28);
  std::vector<Population> pops{oracle::random_population(gen, 10, 2), oracle::random_population(gen, 10, 3)};
  EXPECT_THROW(SurvivalDataset(std::move(pops)), DataError);
  const auto data = oracle::random_dataset(gen, 2, 10, 2);
  EXPECT_THROW(check_dimensions(data, Matrix::Zero(3, 2)), DataError);
  EXPECT_EQ(data.predictor_names()[1], "x2");
}
