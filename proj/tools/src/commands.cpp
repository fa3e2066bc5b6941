#include "lrcox_cli/commands.hpp"

#include <cmath>
#include <limits>
#include <array>

#include "lrcox/errors.hpp"
#include "lrcox/parallel.hpp"
#include "lrcox/random.hpp"
#include "lrcox/survival_metrics.hpp"
#include "lrcox_cli/io.hpp"

namespace lrcox::cli {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> population_names(const SurvivalDataset& data) {
  std::vector<std::string> out;
  for (const auto& pop : data.all()) out.push_back(pop.name());
  return out;
}

std::vector<std::string> factor_names(int r) {
  std::vector<std::string> out;
  for (int k = 1; k <= r; ++k) out.push_back("f" + std::to_string(k));
  return out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json method_options_to_json(Method method, const MethodOptions& o) {
  json cfg;
  cfg["method"] = to_string(method);
  switch (method) {
    case Method::LrCox:
      cfg["solver"] = fit_config_to_json(o.fit);
      break;
    case Method::Convex:
      cfg["lambda_nuc"] = o.lambda_nuc ? json(*o.lambda_nuc) : json(nullptr);
      cfg["gamma_row"] = o.gamma_row ? json(*o.gamma_row) : json(nullptr);
      cfg["convex_grid"] = o.convex_grid;
      cfg["convex_max_iters"] = o.convex_max_iters;
      break;
    default:
      cfg["lambda"] = o.sep_lambda ? json(*o.sep_lambda) : json(nullptr);
      cfg["lambda_grid"] = o.lambda_grid;
      cfg["alpha"] = o.alpha;
      if (method == Method::ProjSepRidge || method == Method::ProjSepLasso) {
        cfg["rank"] = o.proj_rank ? json(*o.proj_rank) : json(nullptr);
      }
      break;
  }
  return cfg;
}

void write_fit_artifact(const fs::path& out_dir, const std::string& command, const SurvivalDataset& train,
                        const MethodResult& result, json config, const fs::path& manifest) {
  const auto pops = population_names(train);
  const auto& f = result.factorization;
  const auto factors = factor_names(f.rank());
  write_atomic(out_dir / "coefficients.csv", matrix_csv(result.estimate, train.predictor_names(), pops));
  write_atomic(out_dir / "factor_U.csv", matrix_csv(f.left, train.predictor_names(), factors));
  write_atomic(out_dir / "factor_D.csv",
               matrix_csv(f.singular_values, factors, {"singular_value"}, "factor"));
  write_atomic(out_dir / "factor_W.csv", matrix_csv(f.right, pops, factors, "population"));

  json doc;
  doc["command"] = command;
  doc["method"] = result.info.value("method", "lrcox");
  doc["manifest"] = manifest.generic_string();
  doc["config"] = std::move(config);
  doc["predictors"] = train.predictor_names();
  doc["populations"] = pops;
  doc["result"] = result.info;
  doc["factor_rank"] = f.rank();
  doc["files"] = {{"coefficients", "coefficients.csv"},
                  {"factor_U", "factor_U.csv"},
                  {"factor_D", "factor_D.csv"},
                  {"factor_W", "factor_W.csv"}};
  write_atomic(out_dir / "artifact.json", dump(doc));
}

Matrix read_sigma(const fs::path& path, Eigen::Index p) {
  if (path.extension() == ".csv") {
    auto m = read_matrix_csv(path);
    if (m.values.rows() != p || m.values.cols() != p) throw DataError(path.string() + ": Sigma must be p x p");
    return m.values;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  if (doc.value("structure", "") != "ar1") throw DataError(path.string() + ": unsupported covariance structure");
  if (doc.value("p", -1) != p) throw DataError(path.string() + ": covariance dimension does not match the data");
  return ar1_covariance(static_cast<int>(p), doc.at("decay").get<double>());
}

json report_to_json(const std::string& label, const MetricReport& rep, const std::vector<std::string>& pops) {
  json doc;
  doc["method"] = label;
  if (rep.model_error) doc["model_error"] = *rep.model_error;
  doc["c_index"] = rep.c_index;
  doc["c_index_kind"] = rep.c_index_kind;
  json per;
  for (std::size_t j = 0; j < pops.size(); ++j) per[pops[j]] = rep.c_index_per_population[j];
  doc["c_index_per_population"] = per;
  if (rep.has_brier) {
    doc["brier"] = {{"q25", rep.brier[0]}, {"q50", rep.brier[1]}, {"q75", rep.brier[2]}};
    json bp;
    for (std::size_t j = 0; j < pops.size(); ++j) {
      const auto& b = rep.brier_per_population[j];
      bp[pops[j]] = {{"q25", b[0]}, {"q50", b[1]}, {"q75", b[2]}};
    }
    doc["brier_per_population"] = bp;
  }
  return doc;
}

std::string plot_rows(const std::string& label, const MetricReport& rep, const std::vector<std::string>& pops) {
  std::string out = "method,metric,population,value\n";
  auto row = [&](const std::string& metric, const std::string& pop, double v) {
    out += label + "," + metric + "," + pop + "," + format_double(v) + "\n";
  };
  if (rep.model_error) row("model_error", "all", *rep.model_error);
  row("c_index", "all", rep.c_index);
  for (std::size_t j = 0; j < pops.size(); ++j) row("c_index", pops[j], rep.c_index_per_population[j]);
  if (rep.has_brier) {
    const char* names[3] = {"brier_q25", "brier_q50", "brier_q75"};
    for (int q = 0; q < 3; ++q) {
      row(names[q], "all", rep.brier[static_cast<std::size_t>(q)]);
      for (std::size_t j = 0; j < pops.size(); ++j) {
        row(names[q], pops[j], rep.brier_per_population[j][static_cast<std::size_t>(q)]);
      }
    }
  }
  return out;
}

std::string csv_number_or_empty(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

TieMode parse_tie_mode(const std::string& s) {
  if (s == "standard-breslow") return TieMode::StandardBreslow;
  if (s == "literal-paper") return TieMode::LiteralPaper;
  throw ConfigError("tie mode must be standard-breslow or literal-paper, got '" + s + "'");
}

HessianMode parse_hessian_mode(const std::string& s) {
  if (s == "taylor-diagonal") return HessianMode::TaylorDiagonal;
  if (s == "uniform-bound") return HessianMode::UniformBound;
  throw ConfigError("hessian mode must be taylor-diagonal or uniform-bound, got '" + s + "'");
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "uniform") return WeightMode::Uniform;
  if (s == "inverse-size") return WeightMode::InverseSize;
  throw ConfigError("weights must be uniform or inverse-size, got '" + s + "'");
}

json spec_to_json(const SimulationSpec& spec) {
  json doc;
  doc["J"] = spec.J;
  doc["n_pattern"] = spec.n_pattern;
  doc["p"] = spec.p;
  doc["r_star"] = spec.r_star;
  doc["s_star"] = spec.s_star;
  doc["alpha"] = spec.alpha;
  std::vector<double> kappa;
  for (int j = 0; j < spec.J; ++j) kappa.push_back(spec.kappa(j));
  doc["kappa_grid"] = kappa;
  doc["tau"] = spec.tau;
  doc["corr_decay"] = spec.corr_decay;
  doc["seed"] = spec.seed;
  doc["n_validation"] = spec.n_validation;
  doc["n_test"] = spec.n_test;
  return doc;
}

void spec_from_json(const nlohmann::json& doc, SimulationSpec& spec) {
  try {
    if (doc.contains("J")) spec.J = doc["J"].get<int>();
    if (doc.contains("n_pattern")) spec.n_pattern = doc["n_pattern"].get<std::vector<int>>();
    if (doc.contains("p")) spec.p = doc["p"].get<int>();
    if (doc.contains("r_star")) spec.r_star = doc["r_star"].get<int>();
    if (doc.contains("s_star")) spec.s_star = doc["s_star"].get<int>();
    if (doc.contains("alpha")) spec.alpha = doc["alpha"].get<double>();
    if (doc.contains("kappa_grid")) spec.kappa_grid = doc["kappa_grid"].get<std::vector<double>>();
    if (doc.contains("tau")) spec.tau = doc["tau"].get<double>();
    if (doc.contains("corr_decay")) spec.corr_decay = doc["corr_decay"].get<double>();
    if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("n_validation")) spec.n_validation = doc["n_validation"].get<int>();
    if (doc.contains("n_test")) spec.n_test = doc["n_test"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid simulation spec JSON: ") + e.what());
  }
}

json fit_config_to_json(const FitConfig& cfg) {
  json doc;
  doc["mu"] = cfg.mu;
  doc["rank"] = cfg.constraints.max_rank;
  doc["sparsity"] = cfg.constraints.max_rows;
  doc["rho0"] = cfg.rho0;
  doc["incr"] = cfg.incr_factor;
  doc["kmax"] = cfg.k_max;
  doc["eps"] = cfg.feas_tol;
  doc["obj_tol"] = cfg.obj_tol;
  doc["max_rho_steps"] = cfg.max_rho_steps;
  doc["hessian_mode"] = to_string(cfg.hessian_mode);
  doc["phi"] = cfg.phi;
  doc["tie_mode"] = to_string(cfg.tie_mode);
  return doc;
}

std::uint64_t replication_seed(std::uint64_t base, int replication) {
  return mix64(base ^ mix64(static_cast<std::uint64_t>(replication) + 0x5851f42d4c957f2dULL));
}

int cmd_simulate(const SimulateOptions& options) {
  const auto& spec = options.spec;
  spec.validate();
  const auto data = generate_benchmark(spec);
  const auto& names = data.train.predictor_names();
  Manifest manifest;
  manifest.predictors = names;
  const std::pair<const SurvivalDataset*, SplitName> splits[] = {
      {&data.train, SplitName::Train}, {&data.validation, SplitName::Validation}, {&data.test, SplitName::Test}};
  for (Eigen::Index j = 0; j < data.train.populations(); ++j) {
    ManifestEntry entry;
    entry.name = data.train.population(j).name();
    for (const auto& [set, split] : splits) {
      const fs::path rel = fs::path("data") / (entry.name + "_" + to_string(split) + ".csv");
      write_atomic(options.out_dir / rel, population_csv(set->population(j), names));
      (split == SplitName::Train ? entry.train : split == SplitName::Validation ? entry.validation : entry.test) = rel;
    }
    manifest.populations.push_back(std::move(entry));
  }
  const auto pops = population_names(data.train);
  write_atomic(options.out_dir / "manifest.json", manifest_json(manifest));
  write_atomic(options.out_dir / "truth_B.csv", matrix_csv(data.truth.B_star, names, pops));
  write_atomic(options.out_dir / "truth_U.csv", matrix_csv(data.truth.U_star, names, factor_names(spec.r_star)));
  write_atomic(options.out_dir / "truth_V.csv", matrix_csv(data.truth.V_star, pops, factor_names(spec.r_star), "population"));
  json sigma;
  sigma["structure"] = "ar1";
  sigma["decay"] = spec.corr_decay;
  sigma["p"] = spec.p;
  write_atomic(options.out_dir / "sigma.json", dump(sigma));
  json resolved = spec_to_json(spec);
  resolved["support"] = data.truth.support;
  write_atomic(options.out_dir / "spec.json", dump(resolved));
  return kOk;
}

int cmd_fit(const FitOptions& options) {
  const auto manifest = read_manifest(options.manifest);
  const auto train = load_split(manifest, SplitName::Train);
  std::optional<SurvivalDataset> validation;
  if (has_split(manifest, SplitName::Validation)) validation = load_split(manifest, SplitName::Validation);
  if (options.method == Method::LrCox) {
    options.method_options.fit.validate(train.predictors(), train.populations());
  }
  const auto result = run_method(options.method, train, validation ? &*validation : nullptr, options.method_options);
  json config = method_options_to_json(options.method, options.method_options);
  config["seed"] = options.seed;
  write_fit_artifact(options.out_dir, "fit", train, result, std::move(config), options.manifest);
  return result.rho_cap_hit ? kRhoCap : kOk;
}

int cmd_cv(const CvOptions& options) {
  const auto manifest = read_manifest(options.manifest);
  const auto train = load_split(manifest, SplitName::Train);
  const auto res = select(train, options.cv, options.solver);
  const auto pops = population_names(train);

  json doc;
  json config;
  config["folds"] = options.cv.folds;
  config["s_grid"] = res.s_grid;
  config["r_grid"] = res.r_grid;
  config["weights_mode"] = options.cv.weights.empty() ? to_string(options.cv.weight_mode) : "explicit";
  config["seed"] = options.cv.seed;
  config["tie_mode"] = to_string(options.cv.tie_mode);
  config["solver"] = fit_config_to_json(options.solver);
  doc["config"] = config;
  doc["manifest"] = options.manifest.generic_string();
  doc["selected"] = {{"s", res.selected_s}, {"r", res.selected_r}};
  json scores = json::array();
  std::string csv = "s,r,score,failed\n";
  for (std::size_t a = 0; a < res.s_grid.size(); ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < res.r_grid.size(); ++b) {
      const double v = res.scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      const bool failed = res.failed[a][b];
      row.push_back(failed ? json(nullptr) : json(v));
      csv += std::to_string(res.s_grid[a]) + "," + std::to_string(res.r_grid[b]) + "," +
             (failed ? std::string() : format_double(v)) + "," + (failed ? "1" : "0") + "\n";
    }
    scores.push_back(row);
  }
  doc["scores"] = scores;
  doc["weights"] = res.weights;
  json folds;
  for (std::size_t j = 0; j < pops.size(); ++j) {
    folds[pops[j]] = {{"labels", res.folds.labels[j]}, {"attempts", res.folds.attempts[j]}};
  }
  doc["folds"] = folds;
  doc["fold_exclusive"] = fold_exclusive(res);
  json diags = json::array();
  for (const auto& d : res.diagnostics) {
    json e;
    e["fold"] = d.fold;
    e["s"] = d.s;
    e["r"] = d.r;
    e["ok"] = d.ok;
    if (d.ok) {
      e["termination"] = d.termination;
      e["rho_steps"] = d.rho_steps;
      e["final_rho"] = d.final_rho;
    } else {
      e["error"] = d.error;
    }
    diags.push_back(e);
  }
  doc["diagnostics"] = diags;
  write_atomic(options.out_dir / "cv.json", dump(doc));
  write_atomic(options.out_dir / "scores.csv", csv);

  MethodOptions mo;
  mo.fit = options.solver;
  mo.fit.tie_mode = options.cv.tie_mode;
  mo.fit.constraints = ConstraintPair{res.selected_r, res.selected_s};
  const auto refit = run_method(Method::LrCox, train, nullptr, mo);
  json fit_cfg = method_options_to_json(Method::LrCox, mo);
  fit_cfg["seed"] = options.cv.seed;
  write_fit_artifact(options.out_dir, "cv", train, refit, std::move(fit_cfg), options.manifest);
  return refit.rho_cap_hit ? kRhoCap : kOk;
}

int cmd_evaluate(const EvaluateOptions& options) {
  const auto manifest = read_manifest(options.manifest);
  const auto test = load_split(manifest, SplitName::Test);
  std::optional<SurvivalDataset> train;
  if (has_split(manifest, SplitName::Train)) train = load_split(manifest, SplitName::Train);
  const auto pops = population_names(test);
  std::string label = options.label;

  MetricReport rep;
  if (options.transfer_factors) {
    if (!train) throw DataError("factor transfer needs a train split to refit on");
    const auto U = read_matrix_csv(*options.transfer_factors);
    const auto r = U.values.cols();
    std::vector<Population> train_f, test_f;
    Matrix coef(r, test.populations());
    for (Eigen::Index j = 0; j < test.populations(); ++j) {
      const auto model = factor_transfer(U.values, U.row_names, train->population(j), manifest.predictors);
      coef.col(j) = model.coefficients;
      const auto& tr = train->population(j);
      const auto& te = test.population(j);
      train_f.emplace_back(tr.name(), tr.time(), tr.status(), model.transform(tr.covariates()));
      test_f.emplace_back(te.name(), te.time(), te.status(), model.transform(te.covariates()));
    }
    const SurvivalDataset train_ds(std::move(train_f), U.col_names);
    const SurvivalDataset test_ds(std::move(test_f), U.col_names);
    rep = evaluate_metrics(test_ds, coef, &train_ds, nullptr, nullptr);
    if (label.empty()) label = "factor-transfer";
    write_atomic(options.out_dir / "transfer_coefficients.csv", matrix_csv(coef, U.col_names, pops, "factor"));
  } else {
    if (!options.artifact) throw ConfigError("evaluate needs --artifact or --transfer-factors");
    const auto coef = read_matrix_csv(*options.artifact / "coefficients.csv");
    if (coef.row_names != manifest.predictors) {
      throw DataError("coefficient predictors disagree with the test data:" +
                      describe_name_diff(manifest.predictors, coef.row_names));
    }
    if (coef.col_names != pops) {
      throw DataError("coefficient populations disagree with the test data:" + describe_name_diff(pops, coef.col_names));
    }
    if (label.empty() && fs::exists(*options.artifact / "artifact.json")) {
      const auto art = nlohmann::json::parse(read_text(*options.artifact / "artifact.json"));
      label = art.value("method", "");
    }
    if (label.empty()) label = "model";
    std::optional<Matrix> truth, sigma;
    if (options.truth) {
      const auto t = read_matrix_csv(*options.truth);
      if (t.row_names != manifest.predictors) {
        throw DataError("truth predictors disagree with the test data:" +
                        describe_name_diff(manifest.predictors, t.row_names));
      }
      truth = t.values;
      if (!options.sigma) throw ConfigError("--truth needs --sigma for the model error");
      sigma = read_sigma(*options.sigma, test.predictors());
    }
    rep = evaluate_metrics(test, coef.values, train ? &*train : nullptr, truth ? &*truth : nullptr,
                           sigma ? &*sigma : nullptr);
  }
  write_atomic(options.out_dir / "report.json", dump(report_to_json(label, rep, pops)));
  write_atomic(options.out_dir / "plot_data.csv", plot_rows(label, rep, pops));
  return kOk;
}

int cmd_benchmark(const BenchmarkOptions& options) {
  options.spec.validate();
  if (options.replications < 1) throw ConfigError("replications must be >= 1");
  if (options.methods.empty()) throw ConfigError("benchmark needs at least one method");
  const bool lrcox_cv = !options.cv_s_grid.empty() || !options.cv_r_grid.empty();
  if (lrcox_cv && (options.cv_s_grid.empty() || options.cv_r_grid.empty())) {
    throw ConfigError("LR-Cox cross-validation needs both --cv-s-grid and --cv-r-grid");
  }

  struct Row {
    std::optional<double> model_error;
    double c_index = 0.0;
    std::array<double, 3> brier{};
    bool ok = false;
    bool rho_cap = false;
    std::string error;
    int s = 0;
    int r = 0;
  };
  const auto R = static_cast<std::size_t>(options.replications);
  const auto M = options.methods.size();
  std::vector<Row> rows(R * M);

  parallel_for(R, [&](std::size_t rep) {
    SimulationSpec spec = options.spec;
    spec.seed = replication_seed(options.spec.seed, static_cast<int>(rep));
    const auto data = generate_benchmark(spec);
    for (std::size_t m = 0; m < M; ++m) {
      Row& row = rows[rep * M + m];
      try {
        MethodOptions mo = options.method_options;
        if (options.methods[m] == Method::LrCox) {
          mo.fit.constraints = ConstraintPair{spec.r_star, spec.s_star};
          if (lrcox_cv) {
            CVConfig cv;
            cv.folds = options.cv_folds;
            cv.s_grid = options.cv_s_grid;
            cv.r_grid = options.cv_r_grid;
            cv.weight_mode = WeightMode::InverseSize;
            cv.seed = spec.seed;
            cv.tie_mode = mo.fit.tie_mode;
            const auto sel = select(data.train, cv, mo.fit);
            mo.fit.constraints = ConstraintPair{sel.selected_r, sel.selected_s};
          }
          row.s = mo.fit.constraints.max_rows;
          row.r = mo.fit.constraints.max_rank;
        }
        const auto res = run_method(options.methods[m], data.train, &data.validation, mo);
        const auto metrics =
            evaluate_metrics(data.test, res.estimate, &data.train, &data.truth.B_star, &data.truth.Sigma);
        row.model_error = metrics.model_error;
        row.c_index = metrics.c_index;
        row.brier = metrics.brier;
        row.rho_cap = res.rho_cap_hit;
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  });

  std::string csv = "kind,replication,method,count,model_error,c_index,brier_q25,brier_q50,brier_q75\n";
  std::string failures = "replication,method,error\n";
  json summary = json::object();
  for (std::size_t rep = 0; rep < R; ++rep) {
    for (std::size_t m = 0; m < M; ++m) {
      const Row& row = rows[rep * M + m];
      const std::string name = to_string(options.methods[m]);
      if (!row.ok) {
        std::string msg = row.error;
        for (auto& ch : msg) {
          if (ch == ',' || ch == '\n') ch = ' ';
        }
        failures += std::to_string(rep) + "," + name + "," + msg + "\n";
        continue;
      }
      csv += "replication," + std::to_string(rep) + "," + name + ",1," + csv_number_or_empty(row.model_error) + "," +
             format_double(row.c_index) + "," + format_double(row.brier[0]) + "," + format_double(row.brier[1]) +
             "," + format_double(row.brier[2]) + "\n";
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    const std::string name = to_string(options.methods[m]);
    std::vector<std::array<double, 5>> values;
    int caps = 0;
    for (std::size_t rep = 0; rep < R; ++rep) {
      const Row& row = rows[rep * M + m];
      if (!row.ok) continue;
      caps += row.rho_cap ? 1 : 0;
      values.push_back({row.model_error.value_or(std::numeric_limits<double>::quiet_NaN()), row.c_index, row.brier[0],
                        row.brier[1], row.brier[2]});
    }
    const auto n = values.size();
    std::array<double, 5> mean{}, two_se{};
    for (std::size_t k = 0; k < 5; ++k) {
      double s = 0.0;
      for (const auto& v : values) s += v[k];
      mean[k] = n > 0 ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
      double ss = 0.0;
      for (const auto& v : values) ss += (v[k] - mean[k]) * (v[k] - mean[k]);
      two_se[k] = n > 1 ? 2.0 * std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
                        : std::numeric_limits<double>::quiet_NaN();
    }
    for (const auto& [kind, arr] : {std::pair{"mean", &mean}, std::pair{"two_se", &two_se}}) {
      csv += std::string(kind) + ",all," + name + "," + std::to_string(n);
      for (double v : *arr) csv += "," + format_double(v);
      csv += "\n";
    }
    summary[name] = {{"completed", n}, {"failed", R - n}, {"rho_cap_hits", caps}};
  }

  json doc;
  doc["spec"] = spec_to_json(options.spec);
  doc["replications"] = options.replications;
  std::vector<std::string> names;
  for (auto m : options.methods) names.emplace_back(to_string(m));
  doc["methods"] = names;
  doc["lrcox_tuning"] = lrcox_cv ? "cross-validation" : "generating-s-r";
  if (lrcox_cv) doc["cv"] = {{"s_grid", options.cv_s_grid}, {"r_grid", options.cv_r_grid}, {"folds", options.cv_folds}};
  doc["lrcox_solver"] = fit_config_to_json(options.method_options.fit);
  doc["summary"] = summary;
  json seeds = json::array();
  for (std::size_t rep = 0; rep < R; ++rep) seeds.push_back(replication_seed(options.spec.seed, static_cast<int>(rep)));
  doc["replication_seeds"] = seeds;
  write_atomic(options.out_dir / "benchmark.csv", csv);
  write_atomic(options.out_dir / "failures.csv", failures);
  write_atomic(options.out_dir / "benchmark.json", dump(doc));
  return kOk;
}

}  // namespace lrcox::cli
