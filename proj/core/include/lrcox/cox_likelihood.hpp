#pragma once

#include <span>
#include <string>
#include <vector>

#include "lrcox/matrix_kernels.hpp"

namespace lrcox {

/// How tied event times enter the partial likelihood.
///
/// StandardBreslow weights each distinct event time by its tie count d_t;
/// LiteralPaper multiplies every tied event's log-risk term by d_t, i.e. a
/// total weight of d_t^2 per distinct time. Both agree on tie-free data.
enum class TieMode { StandardBreslow, LiteralPaper };

/// One population's right-censored sample. Sorting and risk-set grouping are
/// done once here; the object is immutable afterwards.
class Population {
 public:
  /// Subjects sharing one observed time; [begin, end) indexes order().
  struct TimeGroup {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    int events = 0;
    double time = 0.0;
  };

  Population(std::string name, Vector time, std::vector<int> status, Matrix covariates);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] Eigen::Index size() const { return covariates_.rows(); }
  [[nodiscard]] Eigen::Index predictors() const { return covariates_.cols(); }
  [[nodiscard]] const Vector& time() const { return time_; }
  [[nodiscard]] const std::vector<int>& status() const { return status_; }
  [[nodiscard]] const Matrix& covariates() const { return covariates_; }
  [[nodiscard]] int event_count() const { return event_count_; }

  /// Subject indices sorted by descending time (stable in input order).
  [[nodiscard]] const std::vector<Eigen::Index>& order() const { return order_; }
  /// Tie groups in descending time order.
  [[nodiscard]] const std::vector<TimeGroup>& groups() const { return groups_; }
  /// d_i: failures sharing subject i's time (0 for subjects whose time has no failure).
  [[nodiscard]] int tie_count(Eigen::Index subject) const;

  /// New population made of the listed subjects, in the listed order.
  [[nodiscard]] Population subset(std::span<const Eigen::Index> subjects) const;

 private:
  std::string name_;
  Vector time_;
  std::vector<int> status_;
  Matrix covariates_;
  std::vector<Eigen::Index> order_;
  std::vector<TimeGroup> groups_;
  std::vector<int> group_of_;
  int event_count_ = 0;
};

/// J populations sharing one ordered predictor list.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<Population> populations, std::vector<std::string> predictor_names = {});

  [[nodiscard]] Eigen::Index populations() const { return static_cast<Eigen::Index>(pops_.size()); }
  [[nodiscard]] Eigen::Index predictors() const { return p_; }
  [[nodiscard]] const Population& population(Eigen::Index j) const { return pops_[static_cast<std::size_t>(j)]; }
  [[nodiscard]] const std::vector<Population>& all() const { return pops_; }
  [[nodiscard]] const std::vector<std::string>& predictor_names() const { return names_; }
  [[nodiscard]] Eigen::Index total_size() const;

 private:
  std::vector<Population> pops_;
  std::vector<std::string> names_;
  Eigen::Index p_ = 0;
};

/// Value and eta-space derivatives of f(eta) = -l(eta) for one population.
struct PopulationDerivatives {
  double value = 0.0;
  Vector gradient;
  Vector hessian_diag;
};

using LinearPredictors = std::vector<Vector>;
using LikelihoodDerivatives = std::vector<PopulationDerivatives>;

/// l(eta) for one population, log-sum-exp stabilised.
double population_loglik(const Population& pop, const Vector& eta, TieMode mode);

/// Gradient and Hessian diagonal of -l in O(n) via suffix sums over risk sets.
PopulationDerivatives population_derivatives(const Population& pop, const Vector& eta, TieMode mode);

/// Value, gradient and full p x p Hessian of -l as a function of b, O(n p^2).
struct CoefficientDerivatives {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

CoefficientDerivatives coefficient_derivatives(const Population& pop, const Vector& b, TieMode mode);

/// Global bound on the largest eigenvalue of the eta-space Hessian of -l:
/// 0.5 * sum over distinct event times of the tie weight.
double hessian_eigen_bound(const Population& pop, TieMode mode);

LinearPredictors linear_predictors(const SurvivalDataset& data, const Matrix& B);

double partial_loglik(const SurvivalDataset& data, const Matrix& B, TieMode mode);

LikelihoodDerivatives derivatives_eta(const SurvivalDataset& data, const LinearPredictors& eta, TieMode mode);

/// -l(B) + (mu / 2) ||B||_F^2.
double penalized_objective(const SurvivalDataset& data, const Matrix& B, double mu, TieMode mode);

/// Gradient of -l(B) with respect to B (column j is X_j' grad f_j); value written to *value if given.
Matrix neg_loglik_gradient(const SurvivalDataset& data, const Matrix& B, TieMode mode,
                           double* value = nullptr);

void check_dimensions(const SurvivalDataset& data, const Matrix& B);

}  // namespace lrcox
