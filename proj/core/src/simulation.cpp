#include "lrcox/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "lrcox/errors.hpp"
#include "lrcox/survival_metrics.hpp"

namespace lrcox {

namespace {

// Substream tags.
constexpr std::uint64_t kTruthStream = 11;
constexpr std::uint64_t kCovariateStream = 21;
constexpr std::uint64_t kCensorStream = 31;

}  // namespace

double SimulationSpec::default_alpha() { return std::numbers::pi / (600.0 * std::sqrt(6.0)); }

SimulationSpec::SimulationSpec() : alpha(default_alpha()) {}

void SimulationSpec::validate() const {
  std::ostringstream problems;
  if (J < 1) problems << " J must be >= 1;";
  if (p < 1) problems << " p must be >= 1;";
  if (n_pattern.empty()) problems << " n_pattern must be nonempty;";
  for (int n : n_pattern) {
    if (n < 2) {
      problems << " n_pattern entries must be >= 2;";
      break;
    }
  }
  if (r_star < 1 || r_star > std::min(p, J)) problems << " r_star must lie in [1, min(p, J)];";
  if (s_star < 1 || s_star > p) problems << " s_star must lie in [1, p];";
  if (s_star < r_star) problems << " s_star must be >= r_star for rank r_star to be attainable;";
  if (!(alpha > 0.0)) problems << " alpha must be > 0;";
  if (!kappa_grid.empty() && static_cast<int>(kappa_grid.size()) != J) problems << " kappa_grid must have J entries;";
  if (!(tau > 0.0 && tau + 0.20 < 1.0)) problems << " tau must satisfy 0 < tau and tau + 0.20 < 1;";
  if (!(corr_decay > -1.0 && corr_decay < 1.0)) problems << " corr_decay must lie in (-1, 1);";
  if (n_validation < 2) problems << " n_validation must be >= 2;";
  if (n_test < 2) problems << " n_test must be >= 2;";
  if (!problems.str().empty()) throw ConfigError("invalid simulation spec:" + problems.str());
}

int SimulationSpec::train_size(int j) const { return n_pattern[static_cast<std::size_t>(j) % n_pattern.size()]; }

double SimulationSpec::kappa(int j) const {
  if (!kappa_grid.empty()) return kappa_grid[static_cast<std::size_t>(j)];
  return 2000.0 + 10.0 * j;
}

double SimulationSpec::gompertz_scale(int j) const {
  return alpha * std::exp(-kEulerGammaAsPrinted - alpha * kappa(j));
}

double SimulationSpec::censoring_level(int n) const { return n < 300 ? tau : tau + 0.20; }

double gompertz_time(double u, double eta, double alpha, double phi) {
  return std::log1p(-(alpha / phi) * std::log(u) * std::exp(-eta)) / alpha;
}

double gompertz_survival(double t, double eta, double alpha, double phi) {
  return std::exp(-(phi / alpha) * std::expm1(alpha * t) * std::exp(eta));
}

Matrix ar1_covariance(int p, double decay) {
  Matrix sigma(p, p);
  for (int s = 0; s < p; ++s) {
    for (int t = 0; t < p; ++t) sigma(s, t) = std::pow(decay, std::abs(s - t));
  }
  return sigma;
}

Matrix sample_covariates(int n, int p, double decay, Rng& rng) {
  Matrix X(n, p);
  const double innovation = std::sqrt(1.0 - decay * decay);
  for (int i = 0; i < n; ++i) {
    double prev = rng.normal();
    X(i, 0) = prev;
    for (int k = 1; k < p; ++k) {
      prev = decay * prev + innovation * rng.normal();
      X(i, k) = prev;
    }
  }
  return X;
}

GroundTruth generate_truth(const SimulationSpec& spec) {
  spec.validate();
  Rng rng = Rng::stream(spec.seed, {kTruthStream});
  const int p = spec.p;
  const int r = spec.r_star;

  std::vector<int> rows(static_cast<std::size_t>(p));
  std::iota(rows.begin(), rows.end(), 0);
  rng.shuffle(rows);
  std::vector<int> support(rows.begin(), rows.begin() + spec.s_star);
  std::sort(support.begin(), support.end());

  GroundTruth truth;
  truth.U_star = Matrix::Zero(p, r);
  const double lo = std::sqrt(2.0) / r;
  const double hi = std::sqrt(8.0) / r;
  for (int row : support) {
    for (int k = 0; k < r; ++k) {
      const double magnitude = rng.uniform(lo, hi);
      truth.U_star(row, k) = rng.uniform() < 0.5 ? -magnitude : magnitude;
    }
  }

  Matrix gaussian(spec.J, r);
  for (int j = 0; j < spec.J; ++j) {
    for (int k = 0; k < r; ++k) gaussian(j, k) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix q = qr.householderQ() * Matrix::Identity(spec.J, r);
  const Matrix R = qr.matrixQR().topLeftCorner(r, r);
  for (int k = 0; k < r; ++k) {
    if (R(k, k) < 0.0) q.col(k) *= -1.0;
  }
  truth.V_star = q;
  truth.B_star = truth.U_star * truth.V_star.transpose();
  truth.Sigma = ar1_covariance(p, spec.corr_decay);
  truth.support = std::move(support);
  return truth;
}

SampledPopulation sample_population(const SimulationSpec& spec, const GroundTruth& truth, int j, int n, Rng& rng) {
  SampledPopulation out;
  out.covariates = sample_covariates(n, spec.p, spec.corr_decay, rng);
  const Vector eta = out.covariates * truth.B_star.col(j);
  const double phi = spec.gompertz_scale(j);
  out.times.resize(n);
  out.uniforms.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    out.uniforms(i) = u;
    out.times(i) = gompertz_time(u, eta(i), spec.alpha, phi);
  }
  return out;
}

std::vector<std::string> default_predictor_names(int p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) names.push_back("x" + std::to_string(k));
  return names;
}

std::string population_name(int j) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "pop%02d", j + 1);
  return buffer;
}

SurvivalDataset sample_survival(const SimulationSpec& spec, const GroundTruth& truth, std::uint64_t seed, Split split) {
  spec.validate();
  std::vector<Population> pops;
  for (int j = 0; j < spec.J; ++j) {
    const int n = split == Split::Train ? spec.train_size(j)
                  : split == Split::Validation ? spec.n_validation
                                               : spec.n_test;
    Rng rng = Rng::stream(seed, {kCovariateStream, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(j)});
    auto sample = sample_population(spec, truth, j, n, rng);
    pops.emplace_back(population_name(j), std::move(sample.times), std::vector<int>(static_cast<std::size_t>(n), 1),
                      std::move(sample.covariates));
  }
  return SurvivalDataset(std::move(pops), default_predictor_names(spec.p));
}

SurvivalDataset apply_censoring(const SurvivalDataset& uncensored, const SimulationSpec& spec, std::uint64_t seed,
                                Split split) {
  if (!(spec.tau > 0.0 && spec.tau + 0.20 < 1.0)) {
    throw ConfigError("censoring needs 0 < tau and tau + 0.20 < 1");
  }
  std::vector<Population> pops;
  for (Eigen::Index j = 0; j < uncensored.populations(); ++j) {
    const auto& pop = uncensored.population(j);
    const auto n = pop.size();
    std::vector<double> times(pop.time().data(), pop.time().data() + n);
    const double mean = lower_quantile(times, spec.censoring_level(static_cast<int>(n)));
    Rng rng = Rng::stream(seed, {kCensorStream, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(j)});
    Vector y(n);
    std::vector<int> status(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = rng.exponential(mean);
      const double t = pop.time()(i);
      y(i) = std::min(t, c);
      status[static_cast<std::size_t>(i)] = y(i) == t ? 1 : 0;
    }
    pops.emplace_back(pop.name(), std::move(y), std::move(status), pop.covariates());
  }
  return SurvivalDataset(std::move(pops), uncensored.predictor_names());
}

BenchmarkData generate_benchmark(const SimulationSpec& spec) {
  GroundTruth truth = generate_truth(spec);
  auto train = apply_censoring(sample_survival(spec, truth, spec.seed, Split::Train), spec, spec.seed, Split::Train);
  auto validation = apply_censoring(sample_survival(spec, truth, spec.seed, Split::Validation), spec, spec.seed,
                                    Split::Validation);
  auto test = sample_survival(spec, truth, spec.seed, Split::Test);
  return BenchmarkData{std::move(train), std::move(validation), std::move(test), std::move(truth)};
}

}  // namespace lrcox
