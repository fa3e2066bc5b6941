#pragma once

#include <optional>
#include <vector>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/matrix_kernels.hpp"

namespace lrcox {

/// Controls for the nuclear-norm + row-group-lasso estimator
///   argmin -l(B) + lambda_nuc ||B||_* + gamma_row ||B||_{1,2}.
struct ConvexConfig {
  double lambda_nuc = 0.0;
  double gamma_row = 0.0;
  /// Initial step; values <= 0 mean "auto" (start at 1 and backtrack).
  double step_size = 0.0;
  int max_iters = 20000;
  double rel_tol = 1e-7;

  void validate() const;
};

struct ConvexResult {
  Matrix estimate;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
  /// ||x - z||_F / (step * (1 + ||grad(-l)(0)||_F)) at the last iteration.
  double residual = 0.0;
  double final_step = 0.0;
};

/// U * max(D - threshold, 0) * V'.
Matrix prox_nuclear(const Matrix& B, double threshold);

/// Scales each row by max(0, 1 - threshold / ||row||).
Matrix prox_rowgroup(const Matrix& B, double threshold);

double nuclear_norm(const Matrix& B);
double rowgroup_norm(const Matrix& B);

double convex_objective(const SurvivalDataset& data, const Matrix& B, double lambda_nuc, double gamma_row,
                        TieMode mode);

/// Three-operator splitting (gradient step on -l, prox of the nuclear norm,
/// prox of the row-group norm) with a backtracking line search on the step.
ConvexResult fit_convex(const SurvivalDataset& data, const ConvexConfig& config, TieMode mode,
                        const std::optional<Matrix>& init = std::nullopt);

enum class PenaltyKind { Ridge, Lasso, ElasticNet };

/// Per-population problems n_j^{-1} * (-l_j(b)) + lambda_j * pen(b) with
///   ridge:        pen(b) = ||b||_2^2
///   lasso:        pen(b) = ||b||_1
///   elastic net:  pen(b) = alpha ||b||_1 + (1 - alpha)/2 ||b||_2^2
struct SeparateConfig {
  PenaltyKind penalty = PenaltyKind::Ridge;
  std::vector<double> lambda;
  double alpha = 0.5;
  int max_iters = 20000;
  double rel_tol = 1e-10;

  void validate(Eigen::Index J) const;
};

double separate_objective(const Population& pop, const Vector& b, PenaltyKind kind, double lambda, double alpha,
                          TieMode mode);

/// Ridge with lambda > 0 iterates the MM column update with rho = 0 (plus
/// step halving); lasso, elastic net and lambda = 0 use proximal Newton with
/// coordinate descent on the full-Hessian model and a backtracking line search.
Vector fit_separate_population(const Population& pop, PenaltyKind kind, double lambda, double alpha, TieMode mode,
                               int max_iters = 20000, double rel_tol = 1e-10,
                               const std::optional<Vector>& warm = std::nullopt);

Matrix fit_separate(const SurvivalDataset& data, const SeparateConfig& config, TieMode mode);

/// Nearest rank-r approximation of a separately fitted matrix (the "Proj-Sep" estimators).
Matrix project_separate(const Matrix& B_hat, int r);

/// Smallest lasso lambda whose solution is zero: max_k |grad_k(n^{-1}(-l))(0)|.
double lasso_lambda_max(const Population& pop, TieMode mode);

const char* to_string(PenaltyKind k);

}  // namespace lrcox
