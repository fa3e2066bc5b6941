#include "lrcox_cli/methods.hpp"

#include <cmath>
#include <limits>

#include "lrcox/errors.hpp"
#include "lrcox/parallel.hpp"

namespace lrcox::cli {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethods[] = {
    {Method::LrCox, "lrcox"},           {Method::Convex, "convex"},
    {Method::SepRidge, "sep-ridge"},    {Method::SepLasso, "sep-lasso"},
    {Method::SepEnet, "sep-enet"},      {Method::ProjSepRidge, "proj-sep-ridge"},
    {Method::ProjSepLasso, "proj-sep-lasso"},
};

// Ridge has no zero-crossing lambda; the grid top mirrors glmnet's alpha = 0.001
// convention rewritten for the lambda ||b||^2 scaling.
constexpr double kRidgeTopFactor = 500.0;
constexpr double kPathDevRatio = 0.999;
constexpr double kPathDevChange = 1e-5;

const SurvivalDataset& need_validation(const SurvivalDataset* validation, const char* what) {
  if (validation == nullptr) {
    throw ConfigError(std::string(what) + " needs a validation split in the manifest (or fixed tuning flags)");
  }
  return *validation;
}

double total_deviance(const SurvivalDataset& data, const Matrix& B) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < data.populations(); ++j) total += deviance(data.population(j), B.col(j));
  return total;
}

Factorization numerical_factorization(const Matrix& B) {
  auto f = svd(B);
  const double top = f.singular_values.size() > 0 ? f.singular_values(0) : 0.0;
  int r = 0;
  while (r < f.rank() && f.singular_values(r) > 1e-12 * std::max(top, 1.0)) ++r;
  if (r == f.rank()) return f;
  return truncated_svd(B, std::max(r, 1));
}

struct SeparateFit {
  Matrix estimate;
  std::vector<double> lambda;
};

SeparateFit fit_separate_tuned(const SurvivalDataset& train, const SurvivalDataset* validation, PenaltyKind kind,
                               const MethodOptions& options, nlohmann::ordered_json& info) {
  const auto J = train.populations();
  SeparateFit out{Matrix::Zero(train.predictors(), J), std::vector<double>(static_cast<std::size_t>(J), 0.0)};
  if (options.sep_lambda) {
    SeparateConfig cfg;
    cfg.penalty = kind;
    cfg.alpha = options.alpha;
    cfg.lambda.assign(static_cast<std::size_t>(J), *options.sep_lambda);
    out.estimate = fit_separate(train, cfg, TieMode::StandardBreslow);
    out.lambda = cfg.lambda;
    info["lambda"] = out.lambda;
    info["lambda_source"] = "fixed";
    return out;
  }
  const auto& valid = need_validation(validation, to_string(kind));
  if (valid.populations() != J) throw DataError("validation split has a different number of populations");
  parallel_for(static_cast<std::size_t>(J), [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const auto& pop = train.population(j);
    double top = lasso_lambda_max(pop, TieMode::StandardBreslow);
    if (kind == PenaltyKind::Ridge) top *= kRidgeTopFactor;
    if (kind == PenaltyKind::ElasticNet) top /= options.alpha;
    if (!(top > 0.0)) top = 1.0;
    const auto grid = log_grid(top, top * 1e-4, options.lambda_grid);
    double best = std::numeric_limits<double>::infinity();
    std::optional<Vector> warm;
    const double null_dev = deviance(pop, Vector::Zero(pop.predictors()));
    double previous_dev = null_dev;
    for (double lambda : grid) {
      Vector b = fit_separate_population(pop, kind, lambda, options.alpha, TieMode::StandardBreslow, 20000, 1e-10, warm);
      const double dev = deviance(valid.population(j), b);
      if (dev < best) {
        best = dev;
        out.estimate.col(j) = b;
        out.lambda[jj] = lambda;
      }
      // glmnet's path exits: the fit is nearly saturated or has stopped moving.
      const double train_dev = deviance(pop, b);
      const bool saturated = null_dev > 0.0 && 1.0 - train_dev / null_dev >= kPathDevRatio;
      const bool stalled = warm && previous_dev - train_dev < kPathDevChange * previous_dev;
      previous_dev = train_dev;
      warm = std::move(b);
      if (kind != PenaltyKind::Ridge && (saturated || stalled)) break;
    }
  });
  info["lambda"] = out.lambda;
  info["lambda_source"] = "validation-deviance";
  info["lambda_grid_points"] = options.lambda_grid;
  return out;
}

MethodResult run_convex(const SurvivalDataset& train, const SurvivalDataset* validation, const MethodOptions& options) {
  MethodResult out;
  ConvexConfig cfg;
  cfg.max_iters = options.convex_max_iters;
  if (options.lambda_nuc && options.gamma_row) {
    cfg.lambda_nuc = *options.lambda_nuc;
    cfg.gamma_row = *options.gamma_row;
    const auto res = fit_convex(train, cfg, TieMode::StandardBreslow);
    out.estimate = res.estimate;
    out.info["lambda_nuc"] = cfg.lambda_nuc;
    out.info["gamma_row"] = cfg.gamma_row;
    out.info["converged"] = res.converged;
    out.info["iterations"] = res.iterations;
    out.info["residual"] = res.residual;
    out.info["tuning"] = "fixed";
    return out;
  }
  const auto& valid = need_validation(validation, "convex");
  const Matrix g0 = neg_loglik_gradient(train, Matrix::Zero(train.predictors(), train.populations()),
                                        TieMode::StandardBreslow);
  double lambda_top = svd(g0).singular_values(0);
  double gamma_top = g0.rowwise().norm().maxCoeff();
  if (!(lambda_top > 0.0)) lambda_top = 1.0;
  if (!(gamma_top > 0.0)) gamma_top = 1.0;
  const auto lambdas = log_grid(lambda_top, lambda_top * 1e-4, options.convex_grid);
  const auto gammas = log_grid(gamma_top, gamma_top * 1e-4, options.convex_grid);
  const auto G = gammas.size();
  std::vector<Matrix> fits(lambdas.size() * G);
  std::vector<double> devs(fits.size());
  std::vector<int> converged(fits.size(), 0);
  parallel_for(lambdas.size(), [&](std::size_t a) {
    std::optional<Matrix> warm;
    for (std::size_t b = 0; b < G; ++b) {
      ConvexConfig c = cfg;
      c.lambda_nuc = lambdas[a];
      c.gamma_row = gammas[b];
      const auto res = fit_convex(train, c, TieMode::StandardBreslow, warm);
      fits[a * G + b] = res.estimate;
      devs[a * G + b] = total_deviance(valid, res.estimate);
      converged[a * G + b] = res.converged ? 1 : 0;
      warm = res.estimate;
    }
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < devs.size(); ++k) {
    if (devs[k] < devs[best]) best = k;
  }
  out.estimate = fits[best];
  out.info["lambda_nuc"] = lambdas[best / G];
  out.info["gamma_row"] = gammas[best % G];
  out.info["converged"] = converged[best] == 1;
  out.info["validation_deviance"] = devs[best];
  out.info["tuning"] = "validation-deviance";
  out.info["grid"] = {{"lambda_nuc", lambdas}, {"gamma_row", gammas}};
  return out;
}

}  // namespace

Method parse_method(const std::string& name) {
  for (const auto& m : kMethods) {
    if (name == m.name) return m.method;
  }
  std::string known;
  for (const auto& m : kMethods) known += std::string(known.empty() ? "" : ", ") + m.name;
  throw ConfigError("unknown method '" + name + "' (expected one of: " + known + ")");
}

const char* to_string(Method m) {
  for (const auto& entry : kMethods) {
    if (entry.method == m) return entry.name;
  }
  return "lrcox";
}

std::vector<std::string> method_names() {
  std::vector<std::string> out;
  for (const auto& m : kMethods) out.emplace_back(m.name);
  return out;
}

double deviance(const Population& pop, const Vector& b) {
  return -2.0 * population_loglik(pop, pop.covariates() * b, TieMode::StandardBreslow);
}

std::vector<double> log_grid(double hi, double lo, int count) {
  if (count < 1) throw ConfigError("grid size must be >= 1");
  if (count == 1) return {hi};
  std::vector<double> out;
  const double a = std::log(hi), b = std::log(lo);
  for (int k = 0; k < count; ++k) out.push_back(std::exp(a + (b - a) * k / (count - 1)));
  return out;
}

nlohmann::ordered_json describe_fit(const FitResult& result) {
  nlohmann::ordered_json info;
  info["termination"] = to_string(result.termination);
  info["rho_steps"] = result.rho_steps;
  info["final_rho"] = result.final_rho;
  info["dist_rank"] = result.dist_rank;
  info["dist_rows"] = result.dist_rows;
  info["projection_change"] = result.projection_change;
  info["support_size"] = result.support.size();
  info["rank"] = result.factorization.rank();
  nlohmann::ordered_json trace;
  trace["iterations"] = result.trace.size();
  if (!result.trace.empty()) {
    trace["first_objective"] = result.trace.front().objective;
    trace["last_objective"] = result.trace.back().objective;
    std::size_t increases = 0;
    for (std::size_t k = 1; k < result.trace.size(); ++k) {
      if (result.trace[k].rho == result.trace[k - 1].rho && result.trace[k].objective > result.trace[k - 1].objective) {
        ++increases;
      }
    }
    trace["within_rho_increases"] = increases;
  }
  info["trace"] = trace;
  return info;
}

MethodResult run_method(Method method, const SurvivalDataset& train, const SurvivalDataset* validation,
                        const MethodOptions& options) {
  MethodResult out;
  out.info["method"] = to_string(method);
  switch (method) {
    case Method::LrCox: {
      const auto res = fit(train, options.fit);
      out.estimate = res.estimate;
      out.factorization = res.factorization;
      out.rho_cap_hit = res.termination == Termination::RhoCapHit;
      out.info["s"] = options.fit.constraints.max_rows;
      out.info["r"] = options.fit.constraints.max_rank;
      out.info["solver"] = describe_fit(res);
      return out;
    }
    case Method::Convex: {
      auto res = run_convex(train, validation, options);
      res.info["method"] = to_string(method);
      res.factorization = numerical_factorization(res.estimate);
      return res;
    }
    case Method::SepRidge:
    case Method::SepLasso:
    case Method::SepEnet: {
      const auto kind = method == Method::SepRidge   ? PenaltyKind::Ridge
                        : method == Method::SepLasso ? PenaltyKind::Lasso
                                                     : PenaltyKind::ElasticNet;
      out.estimate = fit_separate_tuned(train, validation, kind, options, out.info).estimate;
      if (kind == PenaltyKind::ElasticNet) out.info["alpha"] = options.alpha;
      out.factorization = numerical_factorization(out.estimate);
      return out;
    }
    case Method::ProjSepRidge:
    case Method::ProjSepLasso: {
      const auto kind = method == Method::ProjSepRidge ? PenaltyKind::Ridge : PenaltyKind::Lasso;
      const Matrix sep = fit_separate_tuned(train, validation, kind, options, out.info).estimate;
      const int full = static_cast<int>(std::min(train.predictors(), train.populations()));
      int rank = 0;
      if (options.proj_rank) {
        rank = *options.proj_rank;
        if (rank < 1 || rank > full) throw ConfigError("rank must lie in [1, " + std::to_string(full) + "]");
        out.info["rank_source"] = "fixed";
      } else {
        const auto& valid = need_validation(validation, to_string(method));
        double best = std::numeric_limits<double>::infinity();
        for (int r = 1; r <= full; ++r) {
          const double dev = total_deviance(valid, project_separate(sep, r));
          if (dev < best) {
            best = dev;
            rank = r;
          }
        }
        out.info["rank_source"] = "validation-deviance";
      }
      out.estimate = project_separate(sep, rank);
      out.factorization = truncated_svd(out.estimate, rank);
      out.info["r"] = rank;
      return out;
    }
  }
  throw ConfigError("unsupported method");
}

}  // namespace lrcox::cli
