#pragma once

#include <cstdint>
#include <vector>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/matrix_kernels.hpp"
#include "lrcox/random.hpp"

namespace lrcox {

/// Generator for J populations with Gompertz-baseline Cox survival times,
/// AR(1) Gaussian covariates and a low-rank, row-sparse coefficient matrix.
struct SimulationSpec {
  int J = 12;
  /// Training sizes, repeated cyclically over populations.
  std::vector<int> n_pattern{100, 200, 300};
  int p = 250;
  int r_star = 3;
  int s_star = 20;
  double alpha = 0.0021376236836256;  // pi / (600 sqrt(6)), refined in default_alpha()
  /// kappa_j per population; empty means 2000, 2010, ... (one per population).
  std::vector<double> kappa_grid;
  double tau = 0.35;
  double corr_decay = 0.7;
  std::uint64_t seed = 1;
  int n_validation = 150;
  int n_test = 1000;

  static double default_alpha();
  SimulationSpec();

  /// Throws ConfigError naming every invalid field.
  void validate() const;
  [[nodiscard]] int train_size(int j) const;
  [[nodiscard]] double kappa(int j) const;
  /// phi_j = alpha * exp(-0.5772 - alpha * kappa_j).
  [[nodiscard]] double gompertz_scale(int j) const;
  /// Censoring quantile level: tau when n < 300, tau + 0.20 otherwise.
  [[nodiscard]] double censoring_level(int n) const;
};

struct GroundTruth {
  Matrix B_star;
  Matrix U_star;  // p x r_star, s_star nonzero rows
  Matrix V_star;  // J x r_star, orthonormal columns
  Matrix Sigma;   // AR(1) covariance
  std::vector<int> support;
};

enum class Split : std::uint64_t { Train = 1, Validation = 2, Test = 3 };

/// Euler-Mascheroni constant as printed in the generator's definition.
inline constexpr double kEulerGammaAsPrinted = 0.5772;

/// T = (1/alpha) log{1 - (alpha/phi) log(u) exp(-eta)}.
double gompertz_time(double u, double eta, double alpha, double phi);

/// S(t | eta) = exp{-(phi/alpha)(e^{alpha t} - 1) e^{eta}}.
double gompertz_survival(double t, double eta, double alpha, double phi);

Matrix ar1_covariance(int p, double decay);

/// n draws from N_p(0, Sigma) with Sigma_{st} = decay^{|s-t|}, via the AR(1) recursion.
Matrix sample_covariates(int n, int p, double decay, Rng& rng);

GroundTruth generate_truth(const SimulationSpec& spec);

/// Uncensored draw for one population, keeping the uniforms used for each time.
struct SampledPopulation {
  Matrix covariates;
  Vector times;
  Vector uniforms;
};

SampledPopulation sample_population(const SimulationSpec& spec, const GroundTruth& truth, int j, int n, Rng& rng);

/// Uncensored dataset (status all ones) for the given split sizes.
SurvivalDataset sample_survival(const SimulationSpec& spec, const GroundTruth& truth, std::uint64_t seed, Split split);

/// C ~ Exponential(mean = q_kappa(T)) per population; y = min(T, C), status = 1(y = T).
SurvivalDataset apply_censoring(const SurvivalDataset& uncensored, const SimulationSpec& spec, std::uint64_t seed,
                                Split split = Split::Train);

struct BenchmarkData {
  SurvivalDataset train;
  SurvivalDataset validation;
  SurvivalDataset test;
  GroundTruth truth;
};

/// Censored train and validation splits, uncensored test split.
BenchmarkData generate_benchmark(const SimulationSpec& spec);

std::vector<std::string> default_predictor_names(int p);
std::string population_name(int j);

}  // namespace lrcox
