#include "lrcox/survival_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "lrcox/errors.hpp"
#include "lrcox/random.hpp"

namespace lrcox {

double model_error(const Matrix& B_hat, const Matrix& B_star, const Matrix& Sigma) {
  if (B_hat.rows() != B_star.rows() || B_hat.cols() != B_star.cols()) {
    throw DataError("model_error: estimate and truth differ in shape");
  }
  if (Sigma.rows() != B_hat.rows() || Sigma.cols() != B_hat.rows()) {
    throw DataError("model_error: Sigma must be p x p");
  }
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw DataError("model_error: Sigma is not symmetric");
  }
  const Matrix diff = B_hat - B_star;
  return (diff.transpose() * Sigma * diff).trace();
}

double c_index_uncensored(const Vector& times, const Vector& eta) {
  if (times.size() != eta.size()) throw DataError("c-index: times and predictors differ in length");
  double numerator = 0.0;
  double denominator = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    for (Eigen::Index k = 0; k < times.size(); ++k) {
      if (times(i) > times(k)) {
        denominator += 1.0;
        if (eta(i) < eta(k)) numerator += 1.0;
      }
    }
  }
  if (denominator == 0.0) throw DataError("c-index: no pair of distinct times");
  return numerator / denominator;
}

double c_index_uncensored(const std::vector<Vector>& times, const std::vector<Vector>& eta) {
  if (times.size() != eta.size() || times.empty()) throw DataError("c-index: need matching nonempty populations");
  double total = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) total += c_index_uncensored(times[j], eta[j]);
  return total / static_cast<double>(times.size());
}

std::optional<double> c_index_censored(const Vector& times, const std::vector<int>& status, const Vector& eta) {
  if (times.size() != eta.size() || static_cast<Eigen::Index>(status.size()) != times.size()) {
    throw DataError("c-index: times, status and predictors differ in length");
  }
  double concordant = 0.0;
  double permissible = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (status[static_cast<std::size_t>(i)] != 1) continue;
    for (Eigen::Index k = 0; k < times.size(); ++k) {
      if (times(i) < times(k)) {
        permissible += 1.0;
        if (eta(i) > eta(k)) {
          concordant += 1.0;
        } else if (eta(i) == eta(k)) {
          concordant += 0.5;
        }
      }
    }
  }
  if (permissible == 0.0) return std::nullopt;
  return concordant / permissible;
}

double BaselineHazard::cumulative_at(double t) const {
  const auto* begin = jump_times.data();
  const auto* end = begin + jump_times.size();
  const auto count = std::upper_bound(begin, end, t) - begin;
  return count == 0 ? 0.0 : cumulative(count - 1);
}

double BaselineHazard::survival(double t, double eta) const {
  return std::exp(-cumulative_at(t) * std::exp(eta));
}

BaselineHazard breslow_baseline(const Population& train, const Vector& b_hat) {
  if (b_hat.size() != train.predictors()) throw DataError("baseline: coefficient length must equal p");
  if (!b_hat.allFinite()) throw DataError("baseline: coefficients must be finite");
  const Vector eta = train.covariates() * b_hat;
  const double shift = train.size() > 0 ? eta.maxCoeff() : 0.0;
  const auto& order = train.order();
  std::vector<double> times;
  std::vector<double> jumps;
  double risk = 0.0;
  for (const auto& g : train.groups()) {
    for (auto pos = g.begin; pos < g.end; ++pos) risk += std::exp(eta(order[static_cast<std::size_t>(pos)]) - shift);
    if (g.events > 0) {
      times.push_back(g.time);
      jumps.push_back(static_cast<double>(g.events) / risk * std::exp(-shift));
    }
  }
  std::reverse(times.begin(), times.end());
  std::reverse(jumps.begin(), jumps.end());
  BaselineHazard h;
  const auto m = static_cast<Eigen::Index>(times.size());
  h.jump_times = Eigen::Map<const Vector>(times.data(), m);
  h.increments = Eigen::Map<const Vector>(jumps.data(), m);
  h.cumulative.resize(m);
  double running = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    running += h.increments(k);
    h.cumulative(k) = running;
  }
  return h;
}

double lower_quantile(std::vector<double> values, double kappa) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto index = static_cast<std::size_t>(std::floor(kappa * static_cast<double>(values.size() - 1)));
  return values[index];
}

double brier_score(const Vector& times, const Vector& predicted_survival, double t) {
  if (times.size() != predicted_survival.size() || times.size() == 0) {
    throw DataError("brier: need matching nonempty vectors");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const double alive = times(i) > t ? 1.0 : 0.0;
    const double diff = alive - predicted_survival(i);
    total += diff * diff;
  }
  return total / static_cast<double>(times.size());
}

double brier_score(const Population& test, const Vector& b_hat, const BaselineHazard& baseline, double t) {
  const Vector eta = test.covariates() * b_hat;
  Vector surv(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) surv(i) = baseline.survival(t, eta(i));
  return brier_score(test.time(), surv, t);
}

MetricReport evaluate_metrics(const SurvivalDataset& test, const Matrix& B_hat, const SurvivalDataset* train,
                              const Matrix* B_star, const Matrix* Sigma) {
  check_dimensions(test, B_hat);
  MetricReport report;
  if (B_star != nullptr && Sigma != nullptr) report.model_error = model_error(B_hat, *B_star, *Sigma);

  bool uncensored = true;
  for (const auto& pop : test.all()) {
    uncensored = uncensored && pop.event_count() == pop.size();
  }
  report.c_index_kind = uncensored ? "uncensored" : "harrell";
  double c_total = 0.0;
  for (Eigen::Index j = 0; j < test.populations(); ++j) {
    const auto& pop = test.population(j);
    const Vector eta = pop.covariates() * B_hat.col(j);
    double c = 0.0;
    if (uncensored) {
      c = c_index_uncensored(pop.time(), eta);
    } else {
      c = c_index_censored(pop.time(), pop.status(), eta).value_or(0.5);
    }
    report.c_index_per_population.push_back(c);
    c_total += c;
  }
  report.c_index = c_total / static_cast<double>(test.populations());

  if (train != nullptr) {
    if (train->populations() != test.populations() || train->predictors() != test.predictors()) {
      throw DataError("training and test data disagree in shape");
    }
    report.has_brier = true;
    for (Eigen::Index j = 0; j < test.populations(); ++j) {
      const auto& pop = test.population(j);
      const auto baseline = breslow_baseline(train->population(j), B_hat.col(j));
      std::vector<double> times(pop.time().data(), pop.time().data() + pop.size());
      std::array<double, 3> scores{};
      for (std::size_t q = 0; q < kBrierQuantiles.size(); ++q) {
        const double t = lower_quantile(times, kBrierQuantiles[q]);
        scores[q] = brier_score(pop, B_hat.col(j), baseline, t);
        report.brier[q] += scores[q] / static_cast<double>(test.populations());
      }
      report.brier_per_population.push_back(scores);
    }
  }
  return report;
}

Vector fit_cox_newton(const Population& pop, double mu, TieMode mode, int max_iters, double tol) {
  const auto p = pop.predictors();
  const Matrix& X = pop.covariates();
  auto objective = [&](const Vector& b) { return -population_loglik(pop, X * b, mode) + 0.5 * mu * b.squaredNorm(); };
  Vector b = Vector::Zero(p);
  double current = objective(b);
  for (int iter = 0; iter < max_iters; ++iter) {
    auto d = coefficient_derivatives(pop, b, mode);
    const Vector grad = d.gradient + mu * b;
    Matrix hess = std::move(d.hessian);
    hess.diagonal().array() += mu;
    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() != Eigen::Success) throw SolverError("Cox Newton: Hessian factorization failed");
    Vector step = ldlt.solve(grad);
    Vector next = b - step;
    double value = objective(next);
    for (int h = 0; h < 50 && !(value <= current); ++h) {
      step *= 0.5;
      next = b - step;
      value = objective(next);
    }
    if (!std::isfinite(value)) throw SolverError("Cox Newton diverged (separable data?)");
    b = std::move(next);
    current = value;
    if (step.cwiseAbs().maxCoeff() <= tol * (1.0 + b.cwiseAbs().maxCoeff())) break;
  }
  return b;
}

std::uint64_t matrix_fingerprint(const Matrix& M) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(M.rows()) * 1315423911ULL + static_cast<std::uint64_t>(M.cols()));
  for (Eigen::Index k = 0; k < M.size(); ++k) {
    std::uint64_t bits = 0;
    const double v = M.data()[k];
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  }
  return h;
}

Matrix FactorTransferModel::transform(const Matrix& covariates) const {
  if (matrix_fingerprint(factors) != fingerprint) throw DataError("factor matrix changed since the model was fitted");
  if (covariates.cols() != factors.rows()) throw DataError("covariate columns do not match factor rows");
  return covariates * factors;
}

Vector FactorTransferModel::predict(const Matrix& covariates) const { return transform(covariates) * coefficients; }

FactorTransferModel factor_transfer(const Matrix& factors, const std::vector<std::string>& factor_predictors,
                                    const Population& train, const std::vector<std::string>& data_predictors,
                                    double ridge, TieMode mode) {
  if (factors.cols() < 1 || factors.cols() > factors.rows()) {
    throw ConfigError("factor matrix must have between 1 and p columns");
  }
  if (factor_predictors != data_predictors || static_cast<Eigen::Index>(factor_predictors.size()) != factors.rows()) {
    std::ostringstream diff;
    diff << "predictor mismatch between factors and data:";
    const auto n = std::max(factor_predictors.size(), data_predictors.size());
    for (std::size_t k = 0; k < n; ++k) {
      const std::string a = k < factor_predictors.size() ? factor_predictors[k] : "<none>";
      const std::string b = k < data_predictors.size() ? data_predictors[k] : "<none>";
      if (a != b) diff << "\n  position " << k + 1 << ": factors '" << a << "' vs data '" << b << "'";
    }
    if (static_cast<Eigen::Index>(factor_predictors.size()) != factors.rows()) {
      diff << "\n  factor matrix has " << factors.rows() << " rows but " << factor_predictors.size() << " names";
    }
    throw DataError(diff.str());
  }
  if (train.predictors() != factors.rows()) throw DataError("training covariates do not match factor rows");

  FactorTransferModel model;
  model.factors = factors;
  model.predictor_names = factor_predictors;
  model.fingerprint = matrix_fingerprint(factors);
  const Population scores(train.name(), train.time(), train.status(), model.transform(train.covariates()));
  model.coefficients = fit_cox_newton(scores, ridge, mode);
  return model;
}

}  // namespace lrcox
