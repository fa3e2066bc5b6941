#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrcox/convex_baseline.hpp"
#include "lrcox/mm_solver.hpp"

namespace lrcox::cli {

enum class Method { LrCox, Convex, SepRidge, SepLasso, SepEnet, ProjSepRidge, ProjSepLasso };

Method parse_method(const std::string& name);
const char* to_string(Method m);
std::vector<std::string> method_names();

struct MethodOptions {
  /// LR-Cox solver settings; constraints hold (r, s).
  FitConfig fit;
  /// Convex method: both fixed, or tuned on the validation split when unset.
  std::optional<double> lambda_nuc;
  std::optional<double> gamma_row;
  int convex_grid = 7;
  int convex_max_iters = 5000;
  /// Separate methods: one lambda for every population, or tuned per population when unset.
  std::optional<double> sep_lambda;
  double alpha = 0.5;
  int lambda_grid = 50;
  /// Proj-Sep rank; tuned on the validation split when unset.
  std::optional<int> proj_rank;
};

struct MethodResult {
  Matrix estimate;
  Factorization factorization;
  bool rho_cap_hit = false;
  nlohmann::ordered_json info;
};

/// -2 x standard Breslow log partial likelihood of b on one population.
double deviance(const Population& pop, const Vector& b);

/// log-spaced grid from hi down to lo, `count` points.
std::vector<double> log_grid(double hi, double lo, int count);

/// Runs one estimator. Validation data is needed only for tuned methods.
MethodResult run_method(Method method, const SurvivalDataset& train, const SurvivalDataset* validation,
                        const MethodOptions& options);

/// Summary block for a LR-Cox fit (termination, rho schedule, objective trace).
nlohmann::ordered_json describe_fit(const FitResult& result);

}  // namespace lrcox::cli
