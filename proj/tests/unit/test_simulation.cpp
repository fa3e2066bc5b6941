#include <gtest/gtest.h>

#include <cmath>

#include "lrcox/errors.hpp"
#include "lrcox/simulation.hpp"

using namespace lrcox;

namespace {

SimulationSpec small_spec() {
  SimulationSpec spec;
  spec.J = 4;
  spec.p = 12;
  spec.r_star = 2;
  spec.s_star = 5;
  spec.n_pattern = {30, 40};
  spec.n_validation = 20;
  spec.n_test = 25;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST(Spec, DefaultsAndValidation) {
  SimulationSpec spec;
  EXPECT_NEAR(spec.alpha, M_PI / (600.0 * std::sqrt(6.0)), 1e-18);
  EXPECT_EQ(spec.train_size(0), 100);
  EXPECT_EQ(spec.train_size(4), 200);
  EXPECT_EQ(spec.train_size(11), 300);
  EXPECT_EQ(spec.kappa(11), 2110.0);
  EXPECT_EQ(spec.censoring_level(299), 0.35);
  EXPECT_NEAR(spec.censoring_level(300), 0.55, 1e-15);
  spec.s_star = 2;
  EXPECT_THROW(spec.validate(), ConfigError);
  SimulationSpec bad;
  bad.tau = 0.9;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Gompertz, ClosedFormAtTimeOne) {
  const double alpha = SimulationSpec::default_alpha();
  const double phi = 0.01;
  const double u = std::exp(-phi / alpha * std::expm1(alpha));
  EXPECT_NEAR(gompertz_time(u, 0.0, alpha, phi), 1.0, 1e-10);
  EXPECT_NEAR(gompertz_survival(gompertz_time(0.3, 0.7, alpha, phi), 0.7, alpha, phi), 0.3, 1e-12);
  EXPECT_LT(gompertz_time(0.3, 1.0, alpha, phi), gompertz_time(0.3, 0.0, alpha, phi));
}

TEST(Truth, RankSupportAndOrthogonality) {
  const auto spec = small_spec();
  const auto truth = generate_truth(spec);
  EXPECT_EQ(static_cast<int>(truth.support.size()), spec.s_star);
  EXPECT_EQ(count_nonzero_rows(truth.B_star), spec.s_star);
  EXPECT_LT((truth.V_star.transpose() * truth.V_star - Matrix::Identity(2, 2)).norm(), 1e-10);
  const auto f = svd(truth.B_star);
  EXPECT_GT(f.singular_values(1), 1e-10);
  EXPECT_LT(f.singular_values(2), 1e-10);
  const double lo = std::sqrt(2.0) / 2, hi = std::sqrt(8.0) / 2;
  for (int row : truth.support) {
    for (int k = 0; k < 2; ++k) {
      const double a = std::abs(truth.U_star(row, k));
      EXPECT_GE(a, lo);
      EXPECT_LE(a, hi);
    }
  }
  EXPECT_NEAR(truth.Sigma(0, 2), 0.49, 1e-15);
  EXPECT_EQ(truth.Sigma.diagonal().minCoeff(), 1.0);
}

TEST(Benchmark, SplitSizesAndDeterminism) {
  const auto spec = small_spec();
  const auto a = generate_benchmark(spec);
  const auto b = generate_benchmark(spec);
  EXPECT_EQ(a.train.population(0).size(), 30);
  EXPECT_EQ(a.train.population(1).size(), 40);
  EXPECT_EQ(a.validation.population(3).size(), 20);
  EXPECT_EQ(a.test.population(2).size(), 25);
  EXPECT_EQ(a.train.population(0).name(), "pop01");
  EXPECT_EQ(a.train.predictor_names()[11], "x12");
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ((a.train.population(j).time() - b.train.population(j).time()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a.train.population(j).covariates() - b.train.population(j).covariates()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(a.test.population(j).event_count(), 25);
  }
}

TEST(Censoring, StatusMarksObservedTimesAndMonotoneInTau) {
  auto spec = small_spec();
  const auto truth = generate_truth(spec);
  const auto raw = sample_survival(spec, truth, 5, Split::Train);
  spec.tau = 0.25;
  const auto low = apply_censoring(raw, spec, 5);
  spec.tau = 0.65;
  const auto high = apply_censoring(raw, spec, 5);
  int ev_low = 0, ev_high = 0;
  for (int j = 0; j < 4; ++j) {
    const auto& pop = low.population(j);
    for (Eigen::Index i = 0; i < pop.size(); ++i) {
      EXPECT_LE(pop.time()(i), raw.population(j).time()(i));
      EXPECT_EQ(pop.status()[static_cast<std::size_t>(i)] == 1, pop.time()(i) == raw.population(j).time()(i));
    }
    ev_low += low.population(j).event_count();
    ev_high += high.population(j).event_count();
  }
  EXPECT_GE(ev_high, ev_low);
}

TEST(Covariates, AutoregressiveRecursionHasUnitVariance) {
  Rng rng = Rng::stream(9, {1});
  const Matrix X = sample_covariates(20000, 4, 0.7, rng);
  const Matrix S = X.transpose() * X / 20000.0;
  const Matrix target = ar1_covariance(4, 0.7);
  EXPECT_LT((S - target).cwiseAbs().maxCoeff(), 0.05);
}
