#include "lrcox/convex_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lrcox/errors.hpp"
#include "lrcox/mm_solver.hpp"
#include "lrcox/parallel.hpp"

namespace lrcox {

namespace {

// Armijo slack so rounding noise cannot trigger endless halving.
double line_search_slack(double value) { return 1e-12 * (1.0 + std::abs(value)); }

// -l(B), or +inf when a trial point overflows, so the line search can shrink the step.
double neg_loglik_or_inf(const SurvivalDataset& data, const Matrix& B, TieMode mode) {
  if (!B.allFinite()) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Eigen::Index j = 0; j < data.populations(); ++j) {
    const auto& pop = data.population(j);
    const Vector eta = pop.covariates() * B.col(j);
    if (!eta.allFinite()) return std::numeric_limits<double>::infinity();
    total -= population_loglik(pop, eta, mode);
  }
  return std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

void ConvexConfig::validate() const {
  std::ostringstream problems;
  if (!(lambda_nuc >= 0.0)) problems << " lambda_nuc must be >= 0;";
  if (!(gamma_row >= 0.0)) problems << " gamma_row must be >= 0;";
  if (std::isnan(step_size)) problems << " step_size must be a number;";
  if (max_iters < 1) problems << " max_iters must be >= 1;";
  if (!(rel_tol > 0.0)) problems << " rel_tol must be > 0;";
  if (!problems.str().empty()) throw ConfigError("invalid convex configuration:" + problems.str());
}

Matrix prox_nuclear(const Matrix& B, double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("nuclear prox threshold must be >= 0");
  require_finite(B, "matrix");
  if (threshold == 0.0) return B;
  Factorization f = svd(B);
  f.singular_values = (f.singular_values.array() - threshold).cwiseMax(0.0).matrix();
  return f.reconstruct();
}

Matrix prox_rowgroup(const Matrix& B, double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("row-group prox threshold must be >= 0");
  require_finite(B, "matrix");
  Matrix out = B;
  if (threshold == 0.0) return out;
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    const double norm = B.row(i).norm();
    if (norm <= threshold) {
      out.row(i).setZero();
    } else {
      out.row(i) *= 1.0 - threshold / norm;
    }
  }
  return out;
}

double nuclear_norm(const Matrix& B) {
  Eigen::JacobiSVD<Matrix> svd_values(B);
  return svd_values.singularValues().sum();
}

double rowgroup_norm(const Matrix& B) { return B.rowwise().norm().sum(); }

double convex_objective(const SurvivalDataset& data, const Matrix& B, double lambda_nuc, double gamma_row,
                        TieMode mode) {
  double value = -partial_loglik(data, B, mode);
  if (lambda_nuc > 0.0) value += lambda_nuc * nuclear_norm(B);
  if (gamma_row > 0.0) value += gamma_row * rowgroup_norm(B);
  return value;
}

ConvexResult fit_convex(const SurvivalDataset& data, const ConvexConfig& config, TieMode mode,
                        const std::optional<Matrix>& init) {
  config.validate();
  const auto p = data.predictors();
  const auto J = data.populations();
  Matrix z = init.value_or(Matrix::Zero(p, J));
  check_dimensions(data, z);

  const double grad_scale = 1.0 + neg_loglik_gradient(data, Matrix::Zero(p, J), mode).norm();
  const double lambda = config.lambda_nuc;
  const double gamma = config.gamma_row;
  double step = config.step_size > 0.0 ? config.step_size : 1.0;
  Matrix u = Matrix::Zero(p, J);

  ConvexResult out;
  out.objective_trace.push_back(convex_objective(data, z, lambda, gamma, mode));
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    double fz = 0.0;
    const Matrix grad = neg_loglik_gradient(data, z, mode, &fz);
    if (!std::isfinite(fz)) throw SolverError("convex solver: objective became non-finite");

    Matrix x;
    double gap = 0.0;
    for (int halvings = 0;; ++halvings) {
      x = prox_nuclear(z - step * (u + grad), step * lambda);
      const Matrix incr = x - z;
      const double fx = neg_loglik_or_inf(data, x, mode);
      const double bound = fz + (grad.array() * incr.array()).sum() + incr.squaredNorm() / (2.0 * step);
      gap = fx - bound;
      if (std::isfinite(fx) && gap <= line_search_slack(fz)) break;
      if (halvings >= 60) throw SolverError("convex solver: line search failed to find a step");
      step *= 0.5;
    }

    const double increment = (x - z).norm();
    const Matrix z_next = prox_rowgroup(x + step * u, step * gamma);
    u += (x - z_next) / step;
    z = z_next;

    out.iterations = iter;
    out.final_step = step;
    out.residual = increment / (step * grad_scale);
    const double objective = convex_objective(data, z, lambda, gamma, mode);
    if (!std::isfinite(objective)) throw SolverError("convex solver: objective became non-finite");
    out.objective_trace.push_back(objective);
    if (out.residual < config.rel_tol) {
      out.converged = true;
      break;
    }
  }
  out.estimate = z;
  return out;
}

void SeparateConfig::validate(Eigen::Index J) const {
  std::ostringstream problems;
  if (static_cast<Eigen::Index>(lambda.size()) != J) problems << " need one lambda per population;";
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      problems << " lambda values must be finite and >= 0;";
      break;
    }
  }
  if (penalty == PenaltyKind::ElasticNet && !(alpha > 0.0 && alpha < 1.0)) problems << " alpha must lie in (0, 1);";
  if (max_iters < 1) problems << " max_iters must be >= 1;";
  if (!(rel_tol > 0.0)) problems << " rel_tol must be > 0;";
  if (!problems.str().empty()) throw ConfigError("invalid separate-fit configuration:" + problems.str());
}

double separate_objective(const Population& pop, const Vector& b, PenaltyKind kind, double lambda, double alpha,
                          TieMode mode) {
  const double n = static_cast<double>(std::max<Eigen::Index>(pop.size(), 1));
  double value = -population_loglik(pop, pop.covariates() * b, mode) / n;
  switch (kind) {
    case PenaltyKind::Ridge:
      value += lambda * b.squaredNorm();
      break;
    case PenaltyKind::Lasso:
      value += lambda * b.lpNorm<1>();
      break;
    case PenaltyKind::ElasticNet:
      value += lambda * (alpha * b.lpNorm<1>() + 0.5 * (1.0 - alpha) * b.squaredNorm());
      break;
  }
  return value;
}

double lasso_lambda_max(const Population& pop, TieMode mode) {
  const auto d = population_derivatives(pop, Vector::Zero(pop.size()), mode);
  const double n = static_cast<double>(std::max<Eigen::Index>(pop.size(), 1));
  return (pop.covariates().transpose() * d.gradient).cwiseAbs().maxCoeff() / n;
}

namespace {

Vector ridge_newton(const Population& pop, double lambda, TieMode mode, int max_iters, double rel_tol, Vector b) {
  const double n = static_cast<double>(pop.size());
  // n^{-1} f + lambda ||b||^2 = n^{-1} (f + (mu/2) ||b||^2) with mu = 2 n lambda.
  const double mu = 2.0 * n * lambda;
  const Vector zero = Vector::Zero(pop.predictors());
  double current = separate_objective(pop, b, PenaltyKind::Ridge, lambda, 0.0, mode);
  for (int iter = 0; iter < max_iters; ++iter) {
    const Vector proposal = mm_update_population(pop, b, zero, 0.0, mu, HessianMode::TaylorDiagonal, 0.0, mode);
    Vector step = proposal - b;
    Vector next = proposal;
    double value = separate_objective(pop, next, PenaltyKind::Ridge, lambda, 0.0, mode);
    for (int h = 0; h < 40 && !(value <= current); ++h) {
      step *= 0.5;
      next = b + step;
      value = separate_objective(pop, next, PenaltyKind::Ridge, lambda, 0.0, mode);
    }
    if (!std::isfinite(value)) throw SolverError("ridge Newton iteration diverged");
    const double change = step.cwiseAbs().maxCoeff();
    b = std::move(next);
    current = value;
    if (change <= rel_tol * (1.0 + b.cwiseAbs().maxCoeff())) break;
  }
  return b;
}

// Proximal Newton on
//   n^{-1} f(b) + l2 / 2 ||b||^2 + l1 ||b||_1.
// The quadratic model uses the full coefficient Hessian and is minimised by
// covariance-mode coordinate descent; a backtracking line search on the true
// objective keeps the iterates monotone.
Vector proximal_newton(const Population& pop, double l1, double l2, TieMode mode, int max_iters, double rel_tol,
                       Vector b) {
  const auto n = static_cast<double>(pop.size());
  const auto p = pop.predictors();
  const Matrix& X = pop.covariates();
  auto objective = [&](const Vector& v) {
    return -population_loglik(pop, X * v, mode) / n + 0.5 * l2 * v.squaredNorm() + l1 * v.lpNorm<1>();
  };
  constexpr double kCurvatureFloor = 1e-12;
  constexpr int kMaxSweeps = 10000;

  double current = objective(b);
  for (int outer = 0; outer < max_iters; ++outer) {
    const auto d = coefficient_derivatives(pop, b, mode);
    const Matrix Q = d.hessian / n;
    // r = gradient of the smooth quadratic model at beta, without the l2 term.
    Vector r = d.gradient / n;
    Vector beta = b;
    const double inner_tol = 0.1 * rel_tol;
    auto sweep = [&](bool active_only) {
      double biggest = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        if (active_only && beta(k) == 0.0) continue;
        const double curvature = std::max(Q(k, k), kCurvatureFloor);
        const double next = soft_threshold(curvature * beta(k) - r(k), l1) / (curvature + l2);
        const double delta = next - beta(k);
        if (delta != 0.0) {
          r.noalias() += delta * Q.col(k);
          beta(k) = next;
          biggest = std::max(biggest, std::abs(delta) * std::sqrt(curvature));
        }
      }
      return biggest;
    };
    for (int sweeps = 0; sweeps < kMaxSweeps;) {
      double change = sweep(false);
      ++sweeps;
      if (change <= inner_tol * (1.0 + beta.cwiseAbs().maxCoeff())) break;
      while (sweeps < kMaxSweeps) {
        change = sweep(true);
        ++sweeps;
        if (change <= inner_tol * (1.0 + beta.cwiseAbs().maxCoeff())) break;
      }
    }

    Vector step = beta - b;
    Vector next = beta;
    double value = objective(next);
    for (int h = 0; h < 50 && !(value <= current + line_search_slack(current)); ++h) {
      step *= 0.5;
      next = b + step;
      value = objective(next);
    }
    if (!std::isfinite(value)) throw SolverError("proximal Newton iteration diverged");
    if (!(value <= current + line_search_slack(current))) break;
    const double change = step.cwiseAbs().maxCoeff();
    b = std::move(next);
    current = value;
    if (change <= rel_tol * (1.0 + b.cwiseAbs().maxCoeff())) break;
  }
  return b;
}

}  // namespace

Vector fit_separate_population(const Population& pop, PenaltyKind kind, double lambda, double alpha, TieMode mode,
                               int max_iters, double rel_tol, const std::optional<Vector>& warm) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  Vector start = warm.value_or(Vector::Zero(pop.predictors()));
  if (start.size() != pop.predictors()) throw DataError("warm start has wrong length");
  if (pop.size() == 0) return Vector::Zero(pop.predictors());
  switch (kind) {
    case PenaltyKind::Ridge:
      if (lambda > 0.0) return ridge_newton(pop, lambda, mode, max_iters, rel_tol, std::move(start));
      return proximal_newton(pop, 0.0, 0.0, mode, max_iters, rel_tol, std::move(start));
    case PenaltyKind::Lasso:
      return proximal_newton(pop, lambda, 0.0, mode, max_iters, rel_tol, std::move(start));
    case PenaltyKind::ElasticNet:
      return proximal_newton(pop, lambda * alpha, lambda * (1.0 - alpha), mode, max_iters, rel_tol,
                               std::move(start));
  }
  return start;
}

Matrix fit_separate(const SurvivalDataset& data, const SeparateConfig& config, TieMode mode) {
  config.validate(data.populations());
  Matrix B(data.predictors(), data.populations());
  parallel_for(static_cast<std::size_t>(data.populations()), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    B.col(col) = fit_separate_population(data.population(col), config.penalty, config.lambda[j], config.alpha, mode,
                                         config.max_iters, config.rel_tol);
  });
  return B;
}

Matrix project_separate(const Matrix& B_hat, int r) { return project_rank(B_hat, r); }

const char* to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::Ridge:
      return "ridge";
    case PenaltyKind::Lasso:
      return "lasso";
    case PenaltyKind::ElasticNet:
      return "elastic-net";
  }
  return "unknown";
}

}  // namespace lrcox
