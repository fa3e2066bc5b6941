#include "lrcox/mm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lrcox/errors.hpp"
#include "lrcox/parallel.hpp"

namespace lrcox {

namespace {

constexpr double kHessianFloor = 1e-10;

// Everything the next MM step and the trace need about one iterate.
struct Iterate {
  Matrix B;
  Matrix rank_proj;
  Matrix row_proj;
  LinearPredictors eta;
  LikelihoodDerivatives deriv;
  double neg_loglik = 0.0;
  double dist_rank = 0.0;
  double dist_rows = 0.0;

  [[nodiscard]] double objective(double mu, double rho) const {
    return neg_loglik + 0.5 * mu * B.squaredNorm() + 0.5 * rho * (dist_rank + dist_rows);
  }
};

Iterate evaluate(const SurvivalDataset& data, Matrix B, const ConstraintPair& c, TieMode mode) {
  Iterate it;
  it.B = std::move(B);
  it.rank_proj = project_rank(it.B, c.max_rank);
  it.row_proj = project_rowsparse(it.B, c.max_rows);
  it.dist_rank = (it.B - it.rank_proj).squaredNorm();
  it.dist_rows = (it.B - it.row_proj).squaredNorm();
  it.eta = linear_predictors(data, it.B);
  it.deriv = derivatives_eta(data, it.eta, mode);
  for (const auto& d : it.deriv) it.neg_loglik += d.value;
  return it;
}

Vector update_column(const Population& pop, const Vector& eta, const PopulationDerivatives& deriv,
                     const Vector& target, double rho, double mu, HessianMode mode, double phi, RidgePath path) {
  const double lambda = 2.0 * rho + mu;
  if (!(lambda > 0.0)) throw ConfigError("MM update needs 2 rho + mu > 0");
  if (pop.size() == 0) return rho * target / lambda;
  Vector w;
  if (mode == HessianMode::TaylorDiagonal) {
    w = deriv.hessian_diag.cwiseMax(kHessianFloor);
  } else {
    if (!(phi > 0.0)) throw ConfigError("uniform-bound curvature phi must be positive");
    w = Vector::Constant(pop.size(), phi);
  }
  // X'W z with z = eta - W^{-1} grad, written without forming W^{-1}.
  const Vector rhs = pop.covariates().transpose() * (w.cwiseProduct(eta) - deriv.gradient) + rho * target;
  return ridge_regularized_solve(pop.covariates(), w, rhs, lambda, path);
}

double resolve_phi(const SurvivalDataset& data, const FitConfig& config) {
  if (config.hessian_mode != HessianMode::UniformBound) return 0.0;
  if (config.phi > 0.0) return config.phi;
  double phi = 0.0;
  for (const auto& pop : data.all()) phi = std::max(phi, hessian_eigen_bound(pop, config.tie_mode));
  // A population without events has a zero Hessian; any positive phi majorizes it.
  return phi > 0.0 ? phi : 1.0;
}

}  // namespace

void FitConfig::validate(Eigen::Index p, Eigen::Index J) const {
  std::ostringstream problems;
  if (!(mu >= 0.0) || !std::isfinite(mu)) problems << " mu must be >= 0;";
  if (!(rho0 > 0.0) || !std::isfinite(rho0)) problems << " rho0 must be > 0;";
  if (!(incr_factor > 1.0) || !std::isfinite(incr_factor)) problems << " incr_factor must be > 1;";
  if (k_max < 1) problems << " k_max must be >= 1;";
  if (!(feas_tol > 0.0)) problems << " feas_tol must be > 0;";
  if (!(obj_tol > 0.0)) problems << " obj_tol must be > 0;";
  if (max_rho_steps < 1) problems << " max_rho_steps must be >= 1;";
  if (std::isnan(phi)) problems << " phi must be a number;";
  try {
    constraints.validate(p, J);
  } catch (const ConfigError& e) {
    problems << ' ' << e.what() << ';';
  }
  const auto text = problems.str();
  if (!text.empty()) throw ConfigError("invalid fit configuration:" + text);
}

double penalty_objective(const SurvivalDataset& data, const Matrix& B, double mu, double rho,
                         const ConstraintPair& constraints, TieMode mode) {
  return penalized_objective(data, B, mu, mode) +
         0.5 * rho * (distance_squared(B, ConstraintSet::Rank, constraints.max_rank) +
                      distance_squared(B, ConstraintSet::RowSparse, constraints.max_rows));
}

Vector mm_update_population(const Population& pop, const Vector& b, const Vector& target, double rho, double mu,
                            HessianMode mode, double phi, TieMode tie_mode, RidgePath path) {
  if (b.size() != pop.predictors() || target.size() != pop.predictors()) {
    throw DataError("MM update: coefficient and target length must equal p");
  }
  if (!(rho >= 0.0) || !(mu >= 0.0)) throw ConfigError("MM update needs rho >= 0 and mu >= 0");
  if (mode == HessianMode::UniformBound && !(phi > 0.0)) phi = std::max(hessian_eigen_bound(pop, tie_mode), 1e-12);
  const Vector eta = pop.covariates() * b;
  const auto deriv = population_derivatives(pop, eta, tie_mode);
  return update_column(pop, eta, deriv, target, rho, mu, mode, phi, path);
}

InnerSolveResult mm_inner_solve(const SurvivalDataset& data, const FitConfig& config, const Matrix& B_init,
                                double rho) {
  check_dimensions(data, B_init);
  if (!(rho >= 0.0)) throw ConfigError("rho must be nonnegative");
  const auto& c = config.constraints;
  const double phi = resolve_phi(data, config);

  Iterate current = evaluate(data, B_init, c, config.tie_mode);
  InnerSolveResult result;
  result.initial_objective = current.objective(config.mu, rho);
  result.estimate = B_init;
  if (!std::isfinite(result.initial_objective)) throw SolverError("penalty objective is not finite at B_init");

  const auto J = static_cast<std::size_t>(data.populations());
  for (int k = 1; k <= config.k_max; ++k) {
    const Matrix target = current.rank_proj + current.row_proj;
    Matrix next(current.B.rows(), current.B.cols());
    parallel_for(J, [&](std::size_t j) {
      const auto col = static_cast<Eigen::Index>(j);
      next.col(col) = update_column(data.population(col), current.eta[j], current.deriv[j],
                                    target.col(col), rho, config.mu, config.hessian_mode, phi, RidgePath::Auto);
    });

    Iterate candidate = evaluate(data, std::move(next), c, config.tie_mode);
    const double previous = current.objective(config.mu, rho);
    const double value = candidate.objective(config.mu, rho);
    if (!std::isfinite(value)) {
      throw SolverError("penalty objective became non-finite at rho=" + std::to_string(rho) +
                        ", iteration " + std::to_string(k));
    }
    result.trace.push_back({rho, k, value, candidate.dist_rank, candidate.dist_rows});
    current = std::move(candidate);
    if (std::abs(value - previous) <= config.obj_tol * (1.0 + std::abs(previous))) {
      result.converged = true;
      break;
    }
  }
  result.estimate = current.B;
  return result;
}

std::vector<int> row_support(const Matrix& B) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    if ((B.row(i).array() != 0.0).any()) support.push_back(static_cast<int>(i));
  }
  return support;
}

FitResult fit(const SurvivalDataset& data, const FitConfig& config) {
  return fit(data, config, Matrix::Zero(data.predictors(), data.populations()));
}

FitResult fit(const SurvivalDataset& data, const FitConfig& config, const Matrix& B_init) {
  config.validate(data.predictors(), data.populations());
  check_dimensions(data, B_init);
  const auto& c = config.constraints;

  FitResult out;
  Matrix B = B_init;
  double rho = config.rho0;
  for (int step = 0; step < config.max_rho_steps; ++step) {
    if (step > 0) rho *= config.incr_factor;
    auto inner = mm_inner_solve(data, config, B, rho);
    B = std::move(inner.estimate);
    out.trace.insert(out.trace.end(), inner.trace.begin(), inner.trace.end());
    out.final_rho = rho;
    out.rho_steps = step + 1;
    const auto& last = out.trace.back();
    out.dist_rank = last.dist_rank;
    out.dist_rows = last.dist_rows;
    if (std::max(last.dist_rank, last.dist_rows) < config.feas_tol) {
      out.termination = Termination::FeasibilityMet;
      break;
    }
  }

  out.unprojected = B;
  out.estimate = project_rank(project_rowsparse(B, c.max_rows), c.max_rank);
  if (!out.estimate.allFinite()) throw SolverError("fit produced a non-finite estimate");
  out.projection_change = (out.estimate - B).norm();
  out.factorization = truncated_svd(out.estimate, c.max_rank);
  out.support = row_support(out.estimate);
  return out;
}

std::vector<PathCell> fit_path(const SurvivalDataset& data, const FitConfig& config, const std::vector<int>& s_grid,
                               const std::vector<int>& r_grid) {
  if (s_grid.empty() || r_grid.empty()) throw ConfigError("fit_path needs nonempty s and r grids");
  for (std::size_t k = 1; k < r_grid.size(); ++k) {
    if (r_grid[k] >= r_grid[k - 1]) throw ConfigError("fit_path needs a strictly decreasing r grid");
  }
  std::vector<PathCell> cells;
  const Matrix zero = Matrix::Zero(data.predictors(), data.populations());
  for (int s : s_grid) {
    Matrix warm = zero;
    for (int r : r_grid) {
      PathCell cell{s, r, std::nullopt, {}};
      FitConfig cfg = config;
      cfg.constraints = ConstraintPair{r, s};
      try {
        cell.result = fit(data, cfg, warm);
        warm = cell.result->estimate;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

const char* to_string(Termination t) {
  return t == Termination::FeasibilityMet ? "feasibility-met" : "rho-cap-hit";
}

const char* to_string(HessianMode m) {
  return m == HessianMode::TaylorDiagonal ? "taylor-diagonal" : "uniform-bound";
}

const char* to_string(TieMode m) {
  return m == TieMode::StandardBreslow ? "standard-breslow" : "literal-paper";
}

}  // namespace lrcox
