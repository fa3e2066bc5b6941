#include "lrcox/cox_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrcox/errors.hpp"
#include "lrcox/parallel.hpp"

namespace lrcox {

namespace {

double tie_weight(int events, TieMode mode) {
  const auto d = static_cast<double>(events);
  return mode == TieMode::StandardBreslow ? d : d * d;
}

void check_eta(const Population& pop, const Vector& eta) {
  if (eta.size() != pop.size()) throw DataError("linear predictor length does not match population size");
  if (!eta.allFinite()) throw DataError("linear predictors must be finite");
}

}  // namespace

Population::Population(std::string name, Vector time, std::vector<int> status, Matrix covariates)
    : name_(std::move(name)), time_(std::move(time)), status_(std::move(status)),
      covariates_(std::move(covariates)) {
  const auto n = covariates_.rows();
  if (time_.size() != n || static_cast<Eigen::Index>(status_.size()) != n) {
    throw DataError("population '" + name_ + "': time, status and covariate rows differ in length");
  }
  if (!covariates_.allFinite()) throw DataError("population '" + name_ + "': non-finite covariate");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(time_(i)) || time_(i) < 0.0) {
      throw DataError("population '" + name_ + "': times must be finite and nonnegative");
    }
    const int s = status_[static_cast<std::size_t>(i)];
    if (s != 0 && s != 1) throw DataError("population '" + name_ + "': status must be 0 or 1");
    event_count_ += s;
  }

  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return time_(a) > time_(b); });

  group_of_.assign(static_cast<std::size_t>(n), 0);
  Eigen::Index pos = 0;
  while (pos < n) {
    TimeGroup g;
    g.begin = pos;
    g.time = time_(order_[static_cast<std::size_t>(pos)]);
    while (pos < n && time_(order_[static_cast<std::size_t>(pos)]) == g.time) {
      const auto subject = order_[static_cast<std::size_t>(pos)];
      g.events += status_[static_cast<std::size_t>(subject)];
      group_of_[static_cast<std::size_t>(subject)] = static_cast<int>(groups_.size());
      ++pos;
    }
    g.end = pos;
    groups_.push_back(g);
  }
}

int Population::tie_count(Eigen::Index subject) const {
  return groups_[static_cast<std::size_t>(group_of_[static_cast<std::size_t>(subject)])].events;
}

Population Population::subset(std::span<const Eigen::Index> subjects) const {
  const auto m = static_cast<Eigen::Index>(subjects.size());
  Vector t(m);
  std::vector<int> s(subjects.size());
  Matrix x(m, predictors());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = subjects[static_cast<std::size_t>(k)];
    if (i < 0 || i >= size()) throw DataError("subset index out of range");
    t(k) = time_(i);
    s[static_cast<std::size_t>(k)] = status_[static_cast<std::size_t>(i)];
    x.row(k) = covariates_.row(i);
  }
  return Population(name_, std::move(t), std::move(s), std::move(x));
}

SurvivalDataset::SurvivalDataset(std::vector<Population> populations, std::vector<std::string> predictor_names)
    : pops_(std::move(populations)), names_(std::move(predictor_names)) {
  if (pops_.empty()) throw DataError("dataset needs at least one population");
  p_ = pops_.front().predictors();
  if (p_ < 1) throw DataError("dataset needs at least one predictor");
  for (const auto& pop : pops_) {
    if (pop.predictors() != p_) throw DataError("populations disagree on the number of predictors");
  }
  if (names_.empty()) {
    for (Eigen::Index k = 0; k < p_; ++k) names_.push_back("x" + std::to_string(k + 1));
  }
  if (static_cast<Eigen::Index>(names_.size()) != p_) {
    throw DataError("predictor name count does not match covariate columns");
  }
}

Eigen::Index SurvivalDataset::total_size() const {
  Eigen::Index n = 0;
  for (const auto& pop : pops_) n += pop.size();
  return n;
}

double population_loglik(const Population& pop, const Vector& eta, TieMode mode) {
  check_eta(pop, eta);
  if (pop.size() == 0) return 0.0;
  const double shift = eta.maxCoeff();
  const auto& order = pop.order();
  double risk = 0.0;
  double value = 0.0;
  for (const auto& g : pop.groups()) {
    double event_eta = 0.0;
    for (auto pos = g.begin; pos < g.end; ++pos) {
      const auto i = order[static_cast<std::size_t>(pos)];
      risk += std::exp(eta(i) - shift);
      if (pop.status()[static_cast<std::size_t>(i)] == 1) event_eta += eta(i);
    }
    if (g.events > 0) value += event_eta - tie_weight(g.events, mode) * (shift + std::log(risk));
  }
  return value;
}

PopulationDerivatives population_derivatives(const Population& pop, const Vector& eta, TieMode mode) {
  check_eta(pop, eta);
  const auto n = pop.size();
  PopulationDerivatives out{0.0, Vector::Zero(n), Vector::Zero(n)};
  if (n == 0) return out;

  const double shift = eta.maxCoeff();
  const auto& order = pop.order();
  const auto& groups = pop.groups();
  const Vector scaled = (eta.array() - shift).exp();

  // Descending pass: risk-set sums S_t and the log-likelihood.
  std::vector<double> inv_risk(groups.size(), 0.0);
  std::vector<double> inv_risk_sq(groups.size(), 0.0);
  double risk = 0.0;
  double loglik = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double event_eta = 0.0;
    for (auto pos = groups[g].begin; pos < groups[g].end; ++pos) {
      const auto i = order[static_cast<std::size_t>(pos)];
      risk += scaled(i);
      if (pop.status()[static_cast<std::size_t>(i)] == 1) event_eta += eta(i);
    }
    if (groups[g].events > 0) {
      const double w = tie_weight(groups[g].events, mode);
      loglik += event_eta - w * (shift + std::log(risk));
      inv_risk[g] = w / risk;
      inv_risk_sq[g] = w / (risk * risk);
    }
  }

  // Ascending pass: each subject sits in the risk sets of all event times <= its own.
  double cum = 0.0;
  double cum_sq = 0.0;
  for (auto g = groups.size(); g-- > 0;) {
    cum += inv_risk[g];
    cum_sq += inv_risk_sq[g];
    for (auto pos = groups[g].begin; pos < groups[g].end; ++pos) {
      const auto i = order[static_cast<std::size_t>(pos)];
      const double e = scaled(i);
      out.gradient(i) = e * cum - static_cast<double>(pop.status()[static_cast<std::size_t>(i)]);
      out.hessian_diag(i) = std::max(0.0, e * cum - e * e * cum_sq);
    }
  }
  out.value = -loglik;
  return out;
}

CoefficientDerivatives coefficient_derivatives(const Population& pop, const Vector& b, TieMode mode) {
  const auto p = pop.predictors();
  if (b.size() != p) throw DataError("coefficient length must equal p");
  const Matrix& X = pop.covariates();
  const Vector eta = X * b;
  check_eta(pop, eta);
  CoefficientDerivatives out{0.0, Vector::Zero(p), Matrix::Zero(p, p)};
  if (pop.size() == 0) return out;
  const double shift = eta.maxCoeff();
  const auto& order = pop.order();
  double s0 = 0.0;
  Vector s1 = Vector::Zero(p);
  Matrix s2 = Matrix::Zero(p, p);
  double loglik = 0.0;
  for (const auto& g : pop.groups()) {
    Vector event_sum = Vector::Zero(p);
    double event_eta = 0.0;
    for (auto pos = g.begin; pos < g.end; ++pos) {
      const auto i = order[static_cast<std::size_t>(pos)];
      const double e = std::exp(eta(i) - shift);
      s0 += e;
      s1.noalias() += e * X.row(i).transpose();
      s2.selfadjointView<Eigen::Lower>().rankUpdate(X.row(i).transpose(), e);
      if (pop.status()[static_cast<std::size_t>(i)] == 1) {
        event_sum.noalias() += X.row(i).transpose();
        event_eta += eta(i);
      }
    }
    if (g.events > 0) {
      const double w = tie_weight(g.events, mode);
      const Vector mean = s1 / s0;
      loglik += event_eta - w * (shift + std::log(s0));
      out.gradient.noalias() += w * mean - event_sum;
      out.hessian.noalias() += (w / s0) * s2;
      out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(mean, -w);
    }
  }
  Matrix full = out.hessian.selfadjointView<Eigen::Lower>();
  out.hessian = std::move(full);
  out.value = -loglik;
  return out;
}

double hessian_eigen_bound(const Population& pop, TieMode mode) {
  double total = 0.0;
  for (const auto& g : pop.groups()) {
    if (g.events > 0) total += tie_weight(g.events, mode);
  }
  return 0.5 * total;
}

void check_dimensions(const SurvivalDataset& data, const Matrix& B) {
  if (B.rows() != data.predictors() || B.cols() != data.populations()) {
    throw DataError("coefficient matrix must be p x J = " + std::to_string(data.predictors()) + " x " +
                    std::to_string(data.populations()));
  }
  require_finite(B, "coefficient matrix");
}

LinearPredictors linear_predictors(const SurvivalDataset& data, const Matrix& B) {
  check_dimensions(data, B);
  LinearPredictors eta;
  eta.reserve(static_cast<std::size_t>(data.populations()));
  for (Eigen::Index j = 0; j < data.populations(); ++j) {
    eta.emplace_back(data.population(j).covariates() * B.col(j));
  }
  return eta;
}

double partial_loglik(const SurvivalDataset& data, const Matrix& B, TieMode mode) {
  const auto eta = linear_predictors(data, B);
  std::vector<double> parts(eta.size());
  parallel_for(eta.size(), [&](std::size_t j) {
    parts[j] = population_loglik(data.population(static_cast<Eigen::Index>(j)), eta[j], mode);
  });
  double total = 0.0;
  for (double v : parts) total += v;
  if (!std::isfinite(total)) throw SolverError("partial log-likelihood overflowed");
  return total;
}

LikelihoodDerivatives derivatives_eta(const SurvivalDataset& data, const LinearPredictors& eta, TieMode mode) {
  if (static_cast<Eigen::Index>(eta.size()) != data.populations()) {
    throw DataError("need one linear predictor vector per population");
  }
  LikelihoodDerivatives out(eta.size());
  parallel_for(eta.size(), [&](std::size_t j) {
    out[j] = population_derivatives(data.population(static_cast<Eigen::Index>(j)), eta[j], mode);
  });
  return out;
}

double penalized_objective(const SurvivalDataset& data, const Matrix& B, double mu, TieMode mode) {
  if (!(mu >= 0.0)) throw ConfigError("mu must be nonnegative");
  return -partial_loglik(data, B, mode) + 0.5 * mu * B.squaredNorm();
}

Matrix neg_loglik_gradient(const SurvivalDataset& data, const Matrix& B, TieMode mode, double* value) {
  const auto eta = linear_predictors(data, B);
  const auto deriv = derivatives_eta(data, eta, mode);
  Matrix grad(B.rows(), B.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < data.populations(); ++j) {
    grad.col(j) = data.population(j).covariates().transpose() * deriv[static_cast<std::size_t>(j)].gradient;
    total += deriv[static_cast<std::size_t>(j)].value;
  }
  if (value != nullptr) *value = total;
  return grad;
}

}  // namespace lrcox
