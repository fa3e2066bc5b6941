#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrcox/errors.hpp"
#include "lrcox_cli/commands.hpp"
#include "lrcox_cli/io.hpp"

using namespace lrcox;
using namespace lrcox::cli;

namespace {

// `--config file.json` expands a flat JSON object into `--key value` pairs
// placed before the explicit arguments, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> out;
  std::vector<std::string> injected;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_text(args[k + 1]));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid --config file: " + std::string(e.what()));
      }
      if (!doc.is_object()) throw ConfigError("--config file must hold a JSON object");
      for (const auto& [key, value] : doc.items()) {
        if (value.is_null()) continue;
        if (value.is_boolean()) {
          if (value.get<bool>()) injected.push_back("--" + key);
          continue;
        }
        injected.push_back("--" + key);
        const auto push = [&](const nlohmann::json& v) {
          injected.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        };
        if (value.is_array()) {
          for (const auto& v : value) push(v);
        } else {
          push(value);
        }
      }
      ++k;
      continue;
    }
    out.push_back(args[k]);
  }
  if (injected.empty()) return out;
  // Subcommand name first, then config-derived flags, then explicit flags.
  std::vector<std::string> merged;
  if (!out.empty()) merged.push_back(out.front());
  merged.insert(merged.end(), injected.begin(), injected.end());
  if (out.size() > 1) merged.insert(merged.end(), out.begin() + 1, out.end());
  return merged;
}

void add_solver_flags(CLI::App* app, FitConfig& cfg, std::string& tie, std::string& hessian) {
  app->add_option("--mu", cfg.mu, "Ridge weight mu")->capture_default_str();
  app->add_option("--rho0", cfg.rho0, "Initial penalty rho")->capture_default_str();
  app->add_option("--incr", cfg.incr_factor, "Penalty growth factor")->capture_default_str();
  app->add_option("--kmax", cfg.k_max, "MM iterations per rho")->capture_default_str();
  app->add_option("--eps", cfg.feas_tol, "Feasibility tolerance on squared distances")->capture_default_str();
  app->add_option("--obj-tol", cfg.obj_tol, "Relative objective change ending an inner solve")->capture_default_str();
  app->add_option("--max-rho-steps", cfg.max_rho_steps, "Cap on penalty increases")->capture_default_str();
  app->add_option("--phi", cfg.phi, "Curvature for uniform-bound mode (<= 0: automatic)")->capture_default_str();
  app->add_option("--tie-mode", tie, "standard-breslow | literal-paper")->capture_default_str();
  app->add_option("--hessian-mode", hessian, "taylor-diagonal | uniform-bound")->capture_default_str();
}

void add_spec_flags(CLI::App* app, SimulationSpec& spec, std::string& spec_file) {
  app->add_option("--spec", spec_file, "Simulation spec JSON (flags override its fields)");
  app->add_option("--populations", spec.J, "Number of populations J")->capture_default_str();
  app->add_option("--n-pattern", spec.n_pattern, "Training sizes, repeated over populations");
  app->add_option("--predictors", spec.p, "Number of predictors p")->capture_default_str();
  app->add_option("--true-rank", spec.r_star, "Rank of the generating matrix")->capture_default_str();
  app->add_option("--true-sparsity", spec.s_star, "Nonzero rows of the generating matrix")->capture_default_str();
  app->add_option("--alpha", spec.alpha, "Gompertz shape");
  app->add_option("--kappa", spec.kappa_grid, "Per-population kappa values");
  app->add_option("--tau", spec.tau, "Censoring quantile level")->capture_default_str();
  app->add_option("--corr-decay", spec.corr_decay, "AR(1) covariate correlation")->capture_default_str();
  app->add_option("--n-validation", spec.n_validation, "Validation size per population")->capture_default_str();
  app->add_option("--n-test", spec.n_test, "Test size per population")->capture_default_str();
  app->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
}

// Explicit flags must override the spec file, so the file is applied to a
// fresh spec and then every flag the user actually passed is re-applied.
SimulationSpec resolve_spec(CLI::App* app, const SimulationSpec& from_flags, const std::string& spec_file) {
  if (spec_file.empty()) return from_flags;
  SimulationSpec spec;
  spec_from_json(nlohmann::json::parse(read_text(spec_file)), spec);
  auto given = [&](const char* flag) { return app->count(flag) > 0; };
  if (given("--populations")) spec.J = from_flags.J;
  if (given("--n-pattern")) spec.n_pattern = from_flags.n_pattern;
  if (given("--predictors")) spec.p = from_flags.p;
  if (given("--true-rank")) spec.r_star = from_flags.r_star;
  if (given("--true-sparsity")) spec.s_star = from_flags.s_star;
  if (given("--alpha")) spec.alpha = from_flags.alpha;
  if (given("--kappa")) spec.kappa_grid = from_flags.kappa_grid;
  if (given("--tau")) spec.tau = from_flags.tau;
  if (given("--corr-decay")) spec.corr_decay = from_flags.corr_decay;
  if (given("--n-validation")) spec.n_validation = from_flags.n_validation;
  if (given("--n-test")) spec.n_test = from_flags.n_test;
  if (given("--seed")) spec.seed = from_flags.seed;
  return spec;
}

int run(int argc, char** argv) {
  CLI::App app{"Low-rank, row-sparse multi-population Cox regression", "lrcox"};
  app.require_subcommand(1);

  // simulate
  SimulateOptions sim;
  std::string sim_spec_file;
  auto* simulate = app.add_subcommand("simulate", "Generate train/validation/test data and truth files");
  add_spec_flags(simulate, sim.spec, sim_spec_file);
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();

  // fit
  FitOptions fo;
  std::string fit_method = "lrcox", fit_tie = "standard-breslow", fit_hessian = "taylor-diagonal";
  int fit_rank = 0, fit_sparsity = 0;
  double lambda = 0.0, lambda_nuc = 0.0, gamma_row = 0.0;
  auto* fitcmd = app.add_subcommand("fit", "Fit one estimator and write a fit artifact");
  fitcmd->add_option("--manifest", fo.manifest, "Dataset manifest JSON")->required();
  fitcmd->add_option("--out", fo.out_dir, "Output directory")->required();
  fitcmd->add_option("--method", fit_method, "lrcox | convex | sep-ridge | sep-lasso | sep-enet | proj-sep-ridge | proj-sep-lasso")
      ->capture_default_str();
  fitcmd->add_option("--rank", fit_rank, "Rank bound r (lrcox, proj-sep-*)");
  fitcmd->add_option("--sparsity", fit_sparsity, "Nonzero-row bound s (lrcox)");
  add_solver_flags(fitcmd, fo.method_options.fit, fit_tie, fit_hessian);
  fitcmd->add_option("--lambda", lambda, "Fixed lambda for sep-* (default: tuned on validation)");
  fitcmd->add_option("--alpha", fo.method_options.alpha, "Elastic-net mixing")->capture_default_str();
  fitcmd->add_option("--lambda-grid", fo.method_options.lambda_grid, "Tuning grid size for sep-*")->capture_default_str();
  fitcmd->add_option("--lambda-nuc", lambda_nuc, "Fixed nuclear-norm weight (convex)");
  fitcmd->add_option("--gamma-row", gamma_row, "Fixed row-group weight (convex)");
  fitcmd->add_option("--convex-grid", fo.method_options.convex_grid, "Per-axis tuning grid size (convex)")
      ->capture_default_str();
  fitcmd->add_option("--seed", fo.seed, "Random seed (echoed)")->capture_default_str();

  // cv
  CvOptions co;
  std::string cv_tie = "standard-breslow", cv_hessian = "taylor-diagonal", cv_weights = "uniform";
  auto* cvcmd = app.add_subcommand("cv", "Select (s, r) by K-fold cross-validation, then refit");
  cvcmd->add_option("--manifest", co.manifest, "Dataset manifest JSON")->required();
  cvcmd->add_option("--out", co.out_dir, "Output directory")->required();
  cvcmd->add_option("--s-grid", co.cv.s_grid, "Candidate sparsity levels")->required();
  cvcmd->add_option("--r-grid", co.cv.r_grid, "Candidate ranks")->required();
  cvcmd->add_option("--folds", co.cv.folds, "Number of folds K")->capture_default_str();
  cvcmd->add_option("--seed", co.cv.seed, "Fold assignment seed")->capture_default_str();
  cvcmd->add_option("--weights", cv_weights, "uniform | inverse-size")->capture_default_str();
  add_solver_flags(cvcmd, co.solver, cv_tie, cv_hessian);

  // evaluate
  EvaluateOptions eo;
  std::string artifact, truth, sigma, transfer;
  auto* evalcmd = app.add_subcommand("evaluate", "Score a fit artifact on test data");
  evalcmd->add_option("--artifact", artifact, "Fit artifact directory");
  evalcmd->add_option("--manifest", eo.manifest, "Manifest with a test split")->required();
  evalcmd->add_option("--truth", truth, "Generating coefficient CSV");
  evalcmd->add_option("--sigma", sigma, "Covariate covariance (sigma.json or CSV)");
  evalcmd->add_option("--transfer-factors", transfer, "Factor matrix U (CSV) to refit on");
  evalcmd->add_option("--label", eo.label, "Method label in the outputs");
  evalcmd->add_option("--out", eo.out_dir, "Output directory")->required();

  // benchmark
  BenchmarkOptions bo;
  std::string bench_spec_file, bench_tie = "standard-breslow", bench_hessian = "taylor-diagonal";
  std::vector<std::string> bench_methods;
  auto* benchcmd = app.add_subcommand("benchmark", "Replicated simulate -> fit -> evaluate study");
  add_spec_flags(benchcmd, bo.spec, bench_spec_file);
  benchcmd->add_option("--replications", bo.replications, "Number of replications")->capture_default_str();
  benchcmd->add_option("--methods", bench_methods, "Methods to compare");
  benchcmd->add_option("--cv-s-grid", bo.cv_s_grid, "Tune LR-Cox sparsity by CV over this grid");
  benchcmd->add_option("--cv-r-grid", bo.cv_r_grid, "Tune LR-Cox rank by CV over this grid");
  benchcmd->add_option("--cv-folds", bo.cv_folds, "Folds for LR-Cox CV")->capture_default_str();
  add_solver_flags(benchcmd, bo.method_options.fit, bench_tie, bench_hessian);
  benchcmd->add_option("--lambda-grid", bo.method_options.lambda_grid, "Tuning grid size for sep-*")
      ->capture_default_str();
  benchcmd->add_option("--out", bo.out_dir, "Output directory")->required();

  const auto args = expand_config(argc, argv);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (simulate->parsed()) {
    sim.spec = resolve_spec(simulate, sim.spec, sim_spec_file);
    return cmd_simulate(sim);
  }
  if (fitcmd->parsed()) {
    fo.method = parse_method(fit_method);
    auto& mo = fo.method_options;
    mo.fit.tie_mode = parse_tie_mode(fit_tie);
    mo.fit.hessian_mode = parse_hessian_mode(fit_hessian);
    std::vector<std::string> problems;
    if (fo.method == Method::LrCox) {
      if (fitcmd->count("--rank") == 0) problems.emplace_back("--rank is required for lrcox");
      if (fitcmd->count("--sparsity") == 0) problems.emplace_back("--sparsity is required for lrcox");
      mo.fit.constraints = ConstraintPair{fit_rank, fit_sparsity};
    }
    if (fitcmd->count("--rank") > 0 && fo.method != Method::LrCox) mo.proj_rank = fit_rank;
    if (fitcmd->count("--lambda") > 0) mo.sep_lambda = lambda;
    if ((fitcmd->count("--lambda-nuc") > 0) != (fitcmd->count("--gamma-row") > 0)) {
      problems.emplace_back("--lambda-nuc and --gamma-row must be given together");
    }
    if (fitcmd->count("--lambda-nuc") > 0) {
      mo.lambda_nuc = lambda_nuc;
      mo.gamma_row = gamma_row;
    }
    if (!problems.empty()) {
      std::string msg = "invalid fit flags:";
      for (const auto& p : problems) msg += " " + p + ";";
      throw ConfigError(msg);
    }
    return cmd_fit(fo);
  }
  if (cvcmd->parsed()) {
    co.solver.tie_mode = parse_tie_mode(cv_tie);
    co.solver.hessian_mode = parse_hessian_mode(cv_hessian);
    co.cv.tie_mode = co.solver.tie_mode;
    co.cv.weight_mode = parse_weight_mode(cv_weights);
    return cmd_cv(co);
  }
  if (evalcmd->parsed()) {
    if (!artifact.empty()) eo.artifact = artifact;
    if (!truth.empty()) eo.truth = truth;
    if (!sigma.empty()) eo.sigma = sigma;
    if (!transfer.empty()) eo.transfer_factors = transfer;
    return cmd_evaluate(eo);
  }
  if (benchcmd->parsed()) {
    bo.spec = resolve_spec(benchcmd, bo.spec, bench_spec_file);
    bo.method_options.fit.tie_mode = parse_tie_mode(bench_tie);
    bo.method_options.fit.hessian_mode = parse_hessian_mode(bench_hessian);
    if (!bench_methods.empty()) {
      bo.methods.clear();
      for (const auto& m : bench_methods) bo.methods.push_back(parse_method(m));
    }
    return cmd_benchmark(bo);
  }
  return kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternalError;
  }
}
