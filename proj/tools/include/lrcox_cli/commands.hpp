#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrcox/model_selection.hpp"
#include "lrcox/simulation.hpp"
#include "lrcox_cli/methods.hpp"

namespace lrcox::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kRhoCap = 4, kInternalError = 5 };

nlohmann::ordered_json spec_to_json(const SimulationSpec& spec);
/// Fields absent from `doc` keep the values already in `spec`.
void spec_from_json(const nlohmann::json& doc, SimulationSpec& spec);

nlohmann::ordered_json fit_config_to_json(const FitConfig& cfg);
TieMode parse_tie_mode(const std::string& s);
HessianMode parse_hessian_mode(const std::string& s);
WeightMode parse_weight_mode(const std::string& s);

struct SimulateOptions {
  SimulationSpec spec;
  fs::path out_dir;
};
int cmd_simulate(const SimulateOptions& options);

struct FitOptions {
  fs::path manifest;
  fs::path out_dir;
  Method method = Method::LrCox;
  MethodOptions method_options;
  std::uint64_t seed = 1;
};
int cmd_fit(const FitOptions& options);

struct CvOptions {
  fs::path manifest;
  fs::path out_dir;
  CVConfig cv;
  FitConfig solver;
};
int cmd_cv(const CvOptions& options);

struct EvaluateOptions {
  /// Directory holding coefficients.csv (and artifact.json), unless transfer_factors is set.
  std::optional<fs::path> artifact;
  fs::path manifest;
  std::optional<fs::path> truth;
  std::optional<fs::path> sigma;
  std::optional<fs::path> transfer_factors;
  std::string label;
  fs::path out_dir;
};
int cmd_evaluate(const EvaluateOptions& options);

struct BenchmarkOptions {
  SimulationSpec spec;
  int replications = 20;
  std::vector<Method> methods{Method::LrCox, Method::SepRidge, Method::ProjSepRidge, Method::SepLasso};
  MethodOptions method_options;
  /// LR-Cox uses the generating (s*, r*) unless a CV grid is given.
  std::vector<int> cv_s_grid;
  std::vector<int> cv_r_grid;
  int cv_folds = 5;
  fs::path out_dir;
};
int cmd_benchmark(const BenchmarkOptions& options);

/// Per-replication seed derived from the base seed.
std::uint64_t replication_seed(std::uint64_t base, int replication);

}  // namespace lrcox::cli
