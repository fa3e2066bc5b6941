#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/matrix_kernels.hpp"

namespace lrcox {

/// tr{(B_hat - B_star)' Sigma (B_hat - B_star)}. Sigma must be symmetric within 1e-10.
double model_error(const Matrix& B_hat, const Matrix& B_star, const Matrix& Sigma);

/// Uncensored concordance with strict inequalities:
///   sum_{i,k} 1(y_i > y_k) 1(eta_i < eta_k) / sum_{i,k} 1(y_i > y_k).
/// Ties in eta earn no credit. Throws DataError when no pair has distinct times.
double c_index_uncensored(const Vector& times, const Vector& eta);

/// Average of the per-population uncensored C-index, weight 1/J.
double c_index_uncensored(const std::vector<Vector>& times, const std::vector<Vector>& eta);

/// Harrell's C: pairs whose earlier time is an observed failure; tied
/// predictors earn 1/2. Empty when no pair is comparable.
std::optional<double> c_index_censored(const Vector& times, const std::vector<int>& status, const Vector& eta);

/// Breslow cumulative baseline hazard H0(t), a right-continuous step function.
struct BaselineHazard {
  Vector jump_times;   // ascending distinct event times
  Vector increments;   // nonnegative jumps at jump_times
  Vector cumulative;   // running sums of increments

  [[nodiscard]] double cumulative_at(double t) const;
  /// S(t | x) = exp(-H0(t) * exp(eta)).
  [[nodiscard]] double survival(double t, double eta) const;
};

BaselineHazard breslow_baseline(const Population& train, const Vector& b_hat);

/// Lower sample quantile: the floor(kappa * (n - 1))-th order statistic.
double lower_quantile(std::vector<double> values, double kappa);

/// Mean of {1(y > t) - S_hat(t | x)}^2 over the evaluation subjects.
double brier_score(const Vector& times, const Vector& predicted_survival, double t);

double brier_score(const Population& test, const Vector& b_hat, const BaselineHazard& baseline, double t);

struct MetricReport {
  std::optional<double> model_error;
  double c_index = 0.0;
  /// "uncensored" (strict formula) when every test outcome is observed, else "harrell".
  std::string c_index_kind;
  std::vector<double> c_index_per_population;
  /// Brier scores at the 25th, 50th and 75th percentile of observed test times.
  std::array<double, 3> brier{};
  std::vector<std::array<double, 3>> brier_per_population;
  bool has_brier = false;
};

inline constexpr std::array<double, 3> kBrierQuantiles{0.25, 0.5, 0.75};

/// Evaluates B_hat on test data; Brier scores need the training data for the
/// baseline hazard, and model error needs B_star and Sigma.
MetricReport evaluate_metrics(const SurvivalDataset& test, const Matrix& B_hat, const SurvivalDataset* train,
                              const Matrix* B_star, const Matrix* Sigma);

/// Newton-Raphson for argmin -l(b) + (mu/2)||b||^2 with the full p x p Hessian.
Vector fit_cox_newton(const Population& pop, double mu, TieMode mode = TieMode::StandardBreslow,
                      int max_iters = 200, double tol = 1e-12);

std::uint64_t matrix_fingerprint(const Matrix& M);

/// Cox model on factor scores x'U, fitted in a new population.
struct FactorTransferModel {
  Matrix factors;
  std::vector<std::string> predictor_names;
  Vector coefficients;
  std::uint64_t fingerprint = 0;

  /// X U; rejects a factor matrix whose fingerprint changed since fitting.
  [[nodiscard]] Matrix transform(const Matrix& covariates) const;
  [[nodiscard]] Vector predict(const Matrix& covariates) const;
};

/// Fits the factor-score Cox model (ridge 1e-6 by default). Throws DataError
/// listing the differences when predictor names or order disagree.
FactorTransferModel factor_transfer(const Matrix& factors, const std::vector<std::string>& factor_predictors,
                                    const Population& train, const std::vector<std::string>& data_predictors,
                                    double ridge = 1e-6, TieMode mode = TieMode::StandardBreslow);

}  // namespace lrcox
