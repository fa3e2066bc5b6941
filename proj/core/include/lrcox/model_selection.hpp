#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrcox/cox_likelihood.hpp"
#include "lrcox/mm_solver.hpp"

namespace lrcox {

enum class WeightMode { Uniform, InverseSize };

struct CVConfig {
  int folds = 5;
  std::vector<int> s_grid;
  std::vector<int> r_grid;
  WeightMode weight_mode = WeightMode::Uniform;
  /// Explicit per-population weights; overrides weight_mode when nonempty.
  std::vector<double> weights;
  std::uint64_t seed = 1;
  TieMode tie_mode = TieMode::StandardBreslow;

  /// Throws ConfigError listing every invalid field.
  void validate(const SurvivalDataset& data) const;
  [[nodiscard]] std::vector<double> resolved_weights(const SurvivalDataset& data) const;
};

/// labels[j][i] is the fold of subject i in population j.
struct FoldAssignment {
  int folds = 0;
  std::vector<std::vector<int>> labels;
  /// Shuffles drawn per population before every complement kept an event.
  std::vector<int> attempts;

  /// Subjects of population j outside fold k, in increasing index order.
  [[nodiscard]] std::vector<Eigen::Index> complement(std::size_t j, int k) const;
  [[nodiscard]] std::vector<Eigen::Index> members(std::size_t j, int k) const;
};

/// Stratified by population; fold = position in a seeded shuffle mod K.
FoldAssignment assign_folds(const SurvivalDataset& data, int K, std::uint64_t seed);

/// Sum_j w_j sum_i delta_ji [phi_ji - log sum_{k in R_ji} exp(phi_jk)], risk sets over the full population.
double cv_criterion(const SurvivalDataset& data, const std::vector<Vector>& phi, const std::vector<double>& weights,
                    TieMode mode = TieMode::StandardBreslow);
std::vector<double> cv_criterion_per_population(const SurvivalDataset& data, const std::vector<Vector>& phi,
                                                TieMode mode = TieMode::StandardBreslow);

/// Held-out linear predictors for one (s, r) and the fold that produced each.
struct HeldOutPredictors {
  std::vector<Vector> phi;
  std::vector<std::vector<int>> source_fold;
};

HeldOutPredictors held_out_predictors(const SurvivalDataset& data, const FoldAssignment& folds, int s, int r,
                                      const FitConfig& solver);

double cv_score(const SurvivalDataset& data, const FoldAssignment& folds, int s, int r, const FitConfig& solver,
                const std::vector<double>& weights, TieMode mode = TieMode::StandardBreslow);

struct FoldDiagnostic {
  int fold = 0;
  int s = 0;
  int r = 0;
  bool ok = false;
  std::string termination;
  int rho_steps = 0;
  double final_rho = 0.0;
  std::string error;
};

struct CVResult {
  std::vector<int> s_grid;
  std::vector<int> r_grid;
  /// scores(a, b) is the criterion at (s_grid[a], r_grid[b]); failed cells hold -inf.
  Matrix scores;
  std::vector<std::vector<bool>> failed;
  int selected_s = 0;
  int selected_r = 0;
  std::vector<FoldDiagnostic> diagnostics;
  FoldAssignment folds;
  std::vector<double> weights;

  /// Audit trail: training_subjects[k][j] are the subjects of population j
  /// seen by fold k's fits; source_fold[j][i] is the fold whose fit produced
  /// subject i's held-out predictor (identical for every grid cell).
  std::vector<std::vector<std::vector<Eigen::Index>>> training_subjects;
  std::vector<std::vector<int>> source_fold;
};

CVResult select(const SurvivalDataset& data, const CVConfig& cv, const FitConfig& solver);

/// True when no held-out predictor came from a fit that saw its subject.
bool fold_exclusive(const CVResult& result);

const char* to_string(WeightMode m);

}  // namespace lrcox
