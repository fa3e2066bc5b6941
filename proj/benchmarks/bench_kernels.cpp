#include <benchmark/benchmark.h>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/convex_baseline.hpp"
#include "lrcox/matrix_kernels.hpp"
#include "lrcox/mm_solver.hpp"
#include "lrcox/simulation.hpp"

namespace {

lrcox::Matrix gaussian(int rows, int cols, std::uint64_t seed) {
  auto rng = lrcox::Rng::stream(seed, {1});
  lrcox::Matrix M(rows, cols);
  for (int k = 0; k < M.size(); ++k) M.data()[k] = rng.normal();
  return M;
}

const lrcox::BenchmarkData& desk_data() {
  static const lrcox::BenchmarkData data = [] {
    lrcox::SimulationSpec spec;
    spec.p = 50;
    spec.r_star = 2;
    spec.s_star = 10;
    spec.n_test = 10;
    return lrcox::generate_benchmark(spec);
  }();
  return data;
}

void BM_ProjectRank(benchmark::State& state) {
  const auto B = gaussian(static_cast<int>(state.range(0)), 12, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::project_rank(B, 3));
}
BENCHMARK(BM_ProjectRank)->Arg(50)->Arg(250)->Arg(1000);

void BM_ProjectRowSparse(benchmark::State& state) {
  const auto B = gaussian(static_cast<int>(state.range(0)), 12, 4);
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::project_rowsparse(B, 20));
}
BENCHMARK(BM_ProjectRowSparse)->Arg(50)->Arg(250)->Arg(1000);

void BM_Derivatives(benchmark::State& state) {
  const auto& pop = desk_data().train.population(2);
  const lrcox::Vector eta = pop.covariates() * gaussian(50, 1, 5).col(0) * 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::population_derivatives(pop, eta, lrcox::TieMode::StandardBreslow));
}
BENCHMARK(BM_Derivatives);

void BM_CoefficientHessian(benchmark::State& state) {
  const auto& pop = desk_data().train.population(2);
  const lrcox::Vector b = gaussian(50, 1, 6).col(0) * 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::coefficient_derivatives(pop, b, lrcox::TieMode::StandardBreslow));
}
BENCHMARK(BM_CoefficientHessian);

void BM_RidgeSolve(benchmark::State& state) {
  const int n = 200;
  const int p = static_cast<int>(state.range(0));
  const auto X = gaussian(n, p, 7);
  const lrcox::Vector w = gaussian(n, 1, 8).col(0).cwiseAbs().array() + 0.1;
  const lrcox::Vector rhs = gaussian(p, 1, 9).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::ridge_regularized_solve(X, w, rhs, 1.0));
}
BENCHMARK(BM_RidgeSolve)->Arg(50)->Arg(250)->Arg(1000);

void BM_MMUpdate(benchmark::State& state) {
  const auto& pop = desk_data().train.population(2);
  const lrcox::Vector b = lrcox::Vector::Zero(50);
  const lrcox::Vector target = gaussian(50, 1, 10).col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lrcox::mm_update_population(pop, b, target, 5.0, 0.1, lrcox::HessianMode::TaylorDiagonal));
  }
}
BENCHMARK(BM_MMUpdate);

void BM_LassoPath(benchmark::State& state) {
  const auto& pop = desk_data().train.population(0);
  const double top = lrcox::lasso_lambda_max(pop, lrcox::TieMode::StandardBreslow);
  for (auto _ : state) {
    std::optional<lrcox::Vector> warm;
    for (double lambda = top; lambda > top * 1e-2; lambda *= 0.7) {
      warm = lrcox::fit_separate_population(pop, lrcox::PenaltyKind::Lasso, lambda, 1.0,
                                            lrcox::TieMode::StandardBreslow, 20000, 1e-10, warm);
    }
    benchmark::DoNotOptimize(warm);
  }
}
BENCHMARK(BM_LassoPath)->Unit(benchmark::kMillisecond);

void BM_DeskFit(benchmark::State& state) {
  lrcox::FitConfig cfg;
  cfg.constraints = {2, 10};
  for (auto _ : state) benchmark::DoNotOptimize(lrcox::fit(desk_data().train, cfg));
}
BENCHMARK(BM_DeskFit)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
