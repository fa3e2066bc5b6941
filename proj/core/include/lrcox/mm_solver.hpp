#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/matrix_kernels.hpp"

namespace lrcox {

/// Curvature used in the quadratic surrogate of -l_j around eta^k.
///
/// TaylorDiagonal uses Diag[Hessian(eta^k)] (fast, not a strict majorizer).
/// UniformBound uses phi * I with phi bounding the Hessian everywhere, which
/// makes every inner iteration a true majorize-minimize step.
enum class HessianMode { TaylorDiagonal, UniformBound };

enum class Termination { FeasibilityMet, RhoCapHit };

struct FitConfig {
  double mu = 0.1;
  ConstraintPair constraints;
  double rho0 = 5.0;
  double incr_factor = 1.2;
  int k_max = 10;
  double feas_tol = 1e-6;
  double obj_tol = 1e-8;
  int max_rho_steps = 200;
  HessianMode hessian_mode = HessianMode::TaylorDiagonal;
  /// Curvature for UniformBound; values <= 0 select the global bound
  /// max_j hessian_eigen_bound(population j).
  double phi = 0.0;
  TieMode tie_mode = TieMode::StandardBreslow;

  /// Throws ConfigError listing every invalid field.
  void validate(Eigen::Index p, Eigen::Index J) const;
};

struct TraceEntry {
  double rho = 0.0;
  int iteration = 0;
  double objective = 0.0;
  double dist_rank = 0.0;
  double dist_rows = 0.0;
};

struct InnerSolveResult {
  Matrix estimate;
  std::vector<TraceEntry> trace;
  /// F_rho at B_init, so the first trace entry can be compared against it.
  double initial_objective = 0.0;
  bool converged = false;
};

struct FitResult {
  /// Hard-projected, exactly feasible estimate.
  Matrix estimate;
  Factorization factorization;
  std::vector<int> support;
  std::vector<TraceEntry> trace;
  Termination termination = Termination::RhoCapHit;
  double final_rho = 0.0;
  int rho_steps = 0;
  /// Last penalty-method iterate before hard projection, with its distances.
  Matrix unprojected;
  double dist_rank = 0.0;
  double dist_rows = 0.0;
  /// ||estimate - unprojected||_F.
  double projection_change = 0.0;
};

/// F_rho(B) = -l(B) + (mu/2)||B||_F^2 + (rho/2)[dist^2(B, C_r) + dist^2(B, A_s)].
double penalty_objective(const SurvivalDataset& data, const Matrix& B, double mu, double rho,
                         const ConstraintPair& constraints, TieMode mode);

/// One closed-form column update
///   (X'WX + (2 rho + mu) I)^{-1} (X'W z + rho * target),  z = X b - W^{-1} grad f(X b).
/// W is the floored Hessian diagonal or phi * I. The Woodbury path is used when p > n.
Vector mm_update_population(const Population& pop, const Vector& b, const Vector& target, double rho,
                            double mu, HessianMode mode, double phi = 0.0,
                            TieMode tie_mode = TieMode::StandardBreslow,
                            RidgePath path = RidgePath::Auto);

/// Majorize-minimize iterations at fixed rho, at most config.k_max of them.
InnerSolveResult mm_inner_solve(const SurvivalDataset& data, const FitConfig& config, const Matrix& B_init,
                                double rho);

/// Penalty method: rho0, rho0 * incr, ... until both squared distances drop below feas_tol.
FitResult fit(const SurvivalDataset& data, const FitConfig& config);
FitResult fit(const SurvivalDataset& data, const FitConfig& config, const Matrix& B_init);

struct PathCell {
  int s = 0;
  int r = 0;
  std::optional<FitResult> result;
  std::string error;
};

/// For each s: cold start at r_grid[0], then warm-start each smaller r from the previous estimate.
std::vector<PathCell> fit_path(const SurvivalDataset& data, const FitConfig& config, const std::vector<int>& s_grid,
                               const std::vector<int>& r_grid);

/// Sorted indices of nonzero rows.
std::vector<int> row_support(const Matrix& B);

const char* to_string(Termination t);
const char* to_string(HessianMode m);
const char* to_string(TieMode m);

}  // namespace lrcox
