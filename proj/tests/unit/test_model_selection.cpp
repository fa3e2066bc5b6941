#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lrcox/errors.hpp"
#include "lrcox/model_selection.hpp"
#include "oracles.hpp"

using namespace lrcox;

TEST(Folds, NearEqualSizes) {
  std::mt19937_64 gen(61);
  std::vector<Population> pops{oracle::random_population(gen, 10, 2, 0, 0.0),
                               oracle::random_population(gen, 7, 2, 0, 0.0)};
  const SurvivalDataset data(std::move(pops));
  const auto f5 = assign_folds(data, 5, 3);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(f5.members(0, k).size(), 2u);
  const auto f3 = assign_folds(data, 3, 3);
  std::vector<std::size_t> sizes;
  for (int k = 0; k < 3; ++k) sizes.push_back(f3.members(1, k).size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 3}));
  EXPECT_EQ(assign_folds(data, 3, 3).labels, f3.labels);
  EXPECT_NE(assign_folds(data, 3, 4).labels, f3.labels);
}

TEST(Folds, ComplementKeepsAnEventOrFails) {
  Vector t(4);
  t << 1, 2, 3, 4;
  const SurvivalDataset one({Population("a", t, {1, 0, 0, 0}, Matrix::Zero(4, 1))});
  EXPECT_THROW(assign_folds(one, 2, 1), DataError);
  const SurvivalDataset two({Population("a", t, {1, 1, 0, 0}, Matrix::Zero(4, 1))});
  const auto f = assign_folds(two, 2, 1);
  EXPECT_NE(f.labels[0][0], f.labels[0][1]);
}

TEST(Criterion, EqualPredictorsGiveMinusLogRiskSetSize) {
  Vector t(4);
  t << 4, 3, 2, 1;
  const SurvivalDataset data({Population("a", t, {1, 0, 1, 1}, Matrix::Zero(4, 1))});
  const double expected = -(std::log(1.0) + std::log(3.0) + std::log(4.0));
  EXPECT_NEAR(cv_criterion(data, {Vector::Constant(4, 0.3)}, {2.0}), 2.0 * expected, 1e-12);
}

TEST(Criterion, DecomposesOverPopulations) {
  std::mt19937_64 gen(62);
  const auto data = oracle::random_dataset(gen, 3, 15, 2);
  std::vector<Vector> phi;
  for (int j = 0; j < 3; ++j) phi.push_back(oracle::random_matrix(gen, 15, 1));
  const auto parts = cv_criterion_per_population(data, phi);
  const std::vector<double> w{0.5, 1.0, 2.0};
  EXPECT_NEAR(cv_criterion(data, phi, w), 0.5 * parts[0] + parts[1] + 2.0 * parts[2], 1e-12);
}

TEST(Select, SingleCellAndExclusivity) {
  std::mt19937_64 gen(63);
  const auto data = oracle::random_dataset(gen, 3, 30, 5);
  CVConfig cv;
  cv.folds = 3;
  cv.s_grid = {3};
  cv.r_grid = {1};
  FitConfig solver;
  const auto res = select(data, cv, solver);
  EXPECT_EQ(res.selected_s, 3);
  EXPECT_EQ(res.selected_r, 1);
  EXPECT_EQ(res.scores.rows(), 1);
  EXPECT_TRUE(fold_exclusive(res));
  const double direct = cv_score(data, res.folds, 3, 1, solver, res.weights);
  EXPECT_NEAR(res.scores(0, 0), direct, 1e-10);
}

TEST(Select, ArgmaxAndScaleInvariance) {
  std::mt19937_64 gen(64);
  const auto data = oracle::random_dataset(gen, 3, 30, 5);
  CVConfig cv;
  cv.folds = 3;
  cv.s_grid = {4, 2};
  cv.r_grid = {1, 2};
  FitConfig solver;
  const auto a = select(data, cv, solver);
  EXPECT_EQ(a.s_grid, (std::vector<int>{2, 4}));
  EXPECT_DOUBLE_EQ(a.scores.maxCoeff(),
                   a.scores(std::find(a.s_grid.begin(), a.s_grid.end(), a.selected_s) - a.s_grid.begin(),
                            std::find(a.r_grid.begin(), a.r_grid.end(), a.selected_r) - a.r_grid.begin()));
  cv.weights = {3.0, 3.0, 3.0};
  const auto b = select(data, cv, solver);
  EXPECT_EQ(a.selected_s, b.selected_s);
  EXPECT_EQ(a.selected_r, b.selected_r);
  EXPECT_NEAR(b.scores(0, 0), 3.0 * a.scores(0, 0), 1e-8);
  EXPECT_EQ(a.diagnostics.size(), 12u);
}

TEST(Select, TamperedAuditFailsExclusivity) {
  std::mt19937_64 gen(65);
  const auto data = oracle::random_dataset(gen, 2, 20, 3);
  CVConfig cv;
  cv.folds = 2;
  cv.s_grid = {2};
  cv.r_grid = {1};
  auto res = select(data, cv, FitConfig{});
  ASSERT_TRUE(fold_exclusive(res));
  res.source_fold[0][0] = 1 - res.source_fold[0][0];
  EXPECT_FALSE(fold_exclusive(res));
}

TEST(Select, ValidationListsProblems) {
  std::mt19937_64 gen(66);
  const auto data = oracle::random_dataset(gen, 2, 10, 3);
  CVConfig cv;
  cv.folds = 20;
  cv.s_grid = {9};
  cv.r_grid = {};
  cv.weights = {1.0, -1.0};
  try {
    cv.validate(data);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("folds"), std::string::npos);
    EXPECT_NE(m.find("s_grid"), std::string::npos);
    EXPECT_NE(m.find("r_grid"), std::string::npos);
    EXPECT_NE(m.find("weights"), std::string::npos);
  }
}
