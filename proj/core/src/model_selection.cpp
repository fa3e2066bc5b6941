#include "lrcox/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lrcox/errors.hpp"
#include "lrcox/parallel.hpp"
#include "lrcox/random.hpp"

namespace lrcox {

namespace {

constexpr std::uint64_t kFoldStream = 41;
constexpr int kMaxFoldAttempts = 100;

std::vector<int> sorted_unique(std::vector<int> v, bool descending) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (descending) std::reverse(v.begin(), v.end());
  return v;
}

SurvivalDataset restrict(const SurvivalDataset& data, const FoldAssignment& folds, int k) {
  std::vector<Population> pops;
  for (std::size_t j = 0; j < data.all().size(); ++j) {
    const auto keep = folds.complement(j, k);
    pops.push_back(data.all()[j].subset(keep));
  }
  return SurvivalDataset(std::move(pops), data.predictor_names());
}

}  // namespace

void CVConfig::validate(const SurvivalDataset& data) const {
  std::ostringstream problems;
  const auto J = data.populations();
  const auto p = data.predictors();
  if (folds < 2) problems << " folds must be >= 2;";
  for (const auto& pop : data.all()) {
    if (folds > pop.size()) {
      problems << " folds must be <= every population size (" << pop.name() << " has " << pop.size() << ");";
      break;
    }
  }
  if (s_grid.empty()) problems << " s_grid must be nonempty;";
  if (r_grid.empty()) problems << " r_grid must be nonempty;";
  for (int s : s_grid) {
    if (s < 1 || s > p) {
      problems << " s_grid entries must lie in [1, " << p << "];";
      break;
    }
  }
  for (int r : r_grid) {
    if (r < 1 || r > std::min(p, J)) {
      problems << " r_grid entries must lie in [1, " << std::min(p, J) << "];";
      break;
    }
  }
  if (!weights.empty()) {
    if (static_cast<Eigen::Index>(weights.size()) != J) problems << " weights must have one entry per population;";
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        problems << " weights must be positive and finite;";
        break;
      }
    }
  }
  if (!problems.str().empty()) throw ConfigError("invalid cross-validation config:" + problems.str());
}

std::vector<double> CVConfig::resolved_weights(const SurvivalDataset& data) const {
  if (!weights.empty()) return weights;
  std::vector<double> w;
  for (const auto& pop : data.all()) {
    w.push_back(weight_mode == WeightMode::Uniform ? 1.0 : 1.0 / static_cast<double>(pop.size()));
  }
  return w;
}

std::vector<Eigen::Index> FoldAssignment::complement(std::size_t j, int k) const {
  std::vector<Eigen::Index> out;
  const auto& lab = labels[j];
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] != k) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<Eigen::Index> FoldAssignment::members(std::size_t j, int k) const {
  std::vector<Eigen::Index> out;
  const auto& lab = labels[j];
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] == k) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

FoldAssignment assign_folds(const SurvivalDataset& data, int K, std::uint64_t seed) {
  if (K < 2) throw ConfigError("folds must be >= 2");
  FoldAssignment out;
  out.folds = K;
  for (std::size_t j = 0; j < data.all().size(); ++j) {
    const auto& pop = data.all()[j];
    const auto n = static_cast<std::size_t>(pop.size());
    if (static_cast<std::size_t>(K) > n) {
      throw ConfigError("folds (" + std::to_string(K) + ") exceed the size of population " + pop.name());
    }
    std::vector<int> labels(n);
    bool ok = false;
    int attempt = 0;
    for (; attempt < kMaxFoldAttempts && !ok; ++attempt) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng = Rng::stream(seed, {kFoldStream, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(attempt)});
      rng.shuffle(perm);
      for (std::size_t pos = 0; pos < n; ++pos) labels[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(K));
      std::vector<int> events_in(static_cast<std::size_t>(K), 0);
      for (std::size_t i = 0; i < n; ++i) events_in[static_cast<std::size_t>(labels[i])] += pop.status()[i];
      ok = std::all_of(events_in.begin(), events_in.end(),
                       [&](int e) { return pop.event_count() - e >= 1; });
    }
    if (!ok) {
      throw DataError("population " + pop.name() + " has too few events for " + std::to_string(K) +
                      "-fold cross-validation");
    }
    out.labels.push_back(std::move(labels));
    out.attempts.push_back(attempt);
  }
  return out;
}

std::vector<double> cv_criterion_per_population(const SurvivalDataset& data, const std::vector<Vector>& phi,
                                                TieMode mode) {
  if (static_cast<Eigen::Index>(phi.size()) != data.populations()) {
    throw DataError("cv criterion needs one predictor vector per population");
  }
  std::vector<double> out(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) {
    out[j] = population_loglik(data.all()[j], phi[j], mode);
  }
  return out;
}

double cv_criterion(const SurvivalDataset& data, const std::vector<Vector>& phi, const std::vector<double>& weights,
                    TieMode mode) {
  const auto parts = cv_criterion_per_population(data, phi, mode);
  if (weights.size() != parts.size()) throw ConfigError("weights must have one entry per population");
  double total = 0.0;
  for (std::size_t j = 0; j < parts.size(); ++j) total += weights[j] * parts[j];
  return total;
}

HeldOutPredictors held_out_predictors(const SurvivalDataset& data, const FoldAssignment& folds, int s, int r,
                                      const FitConfig& solver) {
  HeldOutPredictors out;
  for (const auto& pop : data.all()) {
    out.phi.push_back(Vector::Zero(pop.size()));
    out.source_fold.emplace_back(static_cast<std::size_t>(pop.size()), -1);
  }
  FitConfig cfg = solver;
  cfg.constraints = ConstraintPair{r, s};
  for (int k = 0; k < folds.folds; ++k) {
    const auto train = restrict(data, folds, k);
    const auto result = fit(train, cfg);
    for (std::size_t j = 0; j < data.all().size(); ++j) {
      const auto& X = data.all()[j].covariates();
      for (auto i : folds.members(j, k)) {
        out.phi[j](i) = X.row(i).dot(result.estimate.col(static_cast<Eigen::Index>(j)));
        out.source_fold[j][static_cast<std::size_t>(i)] = k;
      }
    }
  }
  return out;
}

double cv_score(const SurvivalDataset& data, const FoldAssignment& folds, int s, int r, const FitConfig& solver,
                const std::vector<double>& weights, TieMode mode) {
  const auto held = held_out_predictors(data, folds, s, r, solver);
  return cv_criterion(data, held.phi, weights, mode);
}

CVResult select(const SurvivalDataset& data, const CVConfig& cv, const FitConfig& solver) {
  cv.validate(data);
  CVResult out;
  out.s_grid = sorted_unique(cv.s_grid, false);
  out.r_grid = sorted_unique(cv.r_grid, false);
  out.weights = cv.resolved_weights(data);
  out.folds = assign_folds(data, cv.folds, cv.seed);

  const auto S = out.s_grid.size();
  const auto R = out.r_grid.size();
  const auto K = static_cast<std::size_t>(cv.folds);
  const auto r_desc = sorted_unique(cv.r_grid, true);
  FitConfig cfg = solver;
  cfg.tie_mode = cv.tie_mode;

  // paths[k][a * R + b] holds fold k's estimate at (s_grid[a], r_grid[b]).
  std::vector<std::vector<PathCell>> paths(K);
  parallel_for(K, [&](std::size_t k) {
    const auto train = restrict(data, out.folds, static_cast<int>(k));
    auto cells = fit_path(train, cfg, out.s_grid, r_desc);
    std::vector<PathCell> ordered(S * R);
    for (auto& cell : cells) {
      const auto a = static_cast<std::size_t>(
          std::lower_bound(out.s_grid.begin(), out.s_grid.end(), cell.s) - out.s_grid.begin());
      const auto b = static_cast<std::size_t>(
          std::lower_bound(out.r_grid.begin(), out.r_grid.end(), cell.r) - out.r_grid.begin());
      ordered[a * R + b] = std::move(cell);
    }
    paths[k] = std::move(ordered);
  });

  out.training_subjects.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < data.all().size(); ++j) {
      out.training_subjects[k].push_back(out.folds.complement(j, static_cast<int>(k)));
    }
  }
  for (const auto& pop : data.all()) out.source_fold.emplace_back(static_cast<std::size_t>(pop.size()), -1);

  out.scores = Matrix::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(R),
                                -std::numeric_limits<double>::infinity());
  out.failed.assign(S, std::vector<bool>(R, false));
  for (std::size_t a = 0; a < S; ++a) {
    for (std::size_t b = 0; b < R; ++b) {
      std::vector<Vector> phi;
      for (const auto& pop : data.all()) phi.push_back(Vector::Zero(pop.size()));
      bool ok = true;
      for (std::size_t k = 0; k < K; ++k) {
        const auto& cell = paths[k][a * R + b];
        FoldDiagnostic diag;
        diag.fold = static_cast<int>(k);
        diag.s = out.s_grid[a];
        diag.r = out.r_grid[b];
        diag.ok = cell.result.has_value();
        if (cell.result) {
          diag.termination = to_string(cell.result->termination);
          diag.rho_steps = cell.result->rho_steps;
          diag.final_rho = cell.result->final_rho;
        } else {
          diag.error = cell.error;
          ok = false;
        }
        out.diagnostics.push_back(std::move(diag));
        if (!cell.result) continue;
        for (std::size_t j = 0; j < data.all().size(); ++j) {
          const auto& X = data.all()[j].covariates();
          for (auto i : out.folds.members(j, static_cast<int>(k))) {
            phi[j](i) = X.row(i).dot(cell.result->estimate.col(static_cast<Eigen::Index>(j)));
            out.source_fold[j][static_cast<std::size_t>(i)] = static_cast<int>(k);
          }
        }
      }
      if (ok) {
        out.scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            cv_criterion(data, phi, out.weights, cv.tie_mode);
      } else {
        out.failed[a][b] = true;
      }
    }
  }

  // Row-major scan over ascending s then ascending r keeps the first maximum,
  // which is the most parsimonious pair among ties.
  bool found = false;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < S; ++a) {
    for (std::size_t b = 0; b < R; ++b) {
      if (out.failed[a][b]) continue;
      const double v = out.scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (!found || v > best) {
        found = true;
        best = v;
        out.selected_s = out.s_grid[a];
        out.selected_r = out.r_grid[b];
      }
    }
  }
  if (!found) throw SolverError("cross-validation failed: every grid cell failed to fit");
  return out;
}

bool fold_exclusive(const CVResult& result) {
  for (std::size_t j = 0; j < result.source_fold.size(); ++j) {
    for (std::size_t i = 0; i < result.source_fold[j].size(); ++i) {
      const int k = result.source_fold[j][i];
      if (k < 0 || static_cast<std::size_t>(k) >= result.training_subjects.size()) return false;
      const auto& seen = result.training_subjects[static_cast<std::size_t>(k)][j];
      if (std::binary_search(seen.begin(), seen.end(), static_cast<Eigen::Index>(i))) return false;
    }
  }
  return true;
}

const char* to_string(WeightMode m) { return m == WeightMode::Uniform ? "uniform" : "inverse-size"; }

}  // namespace lrcox
