#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrcox_cli/commands.hpp"
#include "lrcox_cli/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lrcox;
using namespace lrcox::cli;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lrcox_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = std::string("\"") + LRCOX_EXE + "\" " + args + " > /dev/null";
  cmd += err_file.empty() ? " 2>&1" : " 2> \"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const std::string kSmallSim =
    "--populations 4 --n-pattern 50 70 --predictors 10 --true-rank 2 --true-sparsity 4 --n-validation 50 "
    "--n-test 100 --seed 3";

fs::path small_dataset() {
  static const fs::path dir = [] {
    const auto d = fresh_dir("sim");
    EXPECT_EQ(run("simulate " + kSmallSim + " --out " + d.string()), 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(CliIo, PopulationCsvRoundTripIsByteIdentical) {
  std::mt19937_64 gen(1);
  const auto pop = oracle::random_population(gen, 25, 3, 3);
  const std::vector<std::string> names{"x1", "x2", "x3"};
  const auto dir = fresh_dir("roundtrip");
  const std::string first = population_csv(pop, names);
  write_atomic(dir / "a.csv", first);
  const auto back = read_population_csv(dir / "a.csv", "pop");
  EXPECT_EQ(population_csv(back.population, back.predictors), first);
  EXPECT_EQ(first.substr(0, first.find('\n')), "time,status,x1,x2,x3");

  const Matrix M = oracle::random_matrix(gen, 3, 2);
  const std::string m1 = matrix_csv(M, names, {"pop01", "pop02"});
  write_atomic(dir / "m.csv", m1);
  const auto lm = read_matrix_csv(dir / "m.csv");
  EXPECT_EQ(matrix_csv(lm.values, lm.row_names, lm.col_names), m1);
}

TEST(CliIo, NameDiffListsMissingAndExtraPredictors) {
  const auto text = describe_name_diff({"x1", "x2", "x3"}, {"x1", "x3", "x9"});
  EXPECT_NE(text.find("x2"), std::string::npos);
  EXPECT_NE(text.find("x9"), std::string::npos);
}

TEST(CliCommands, SimulateWritesManifestAndThreeColumnHeader) {
  const auto dir = fresh_dir("p3");
  ASSERT_EQ(run("simulate --populations 2 --n-pattern 30 --predictors 3 --true-rank 1 --true-sparsity 2 "
                "--n-validation 20 --n-test 20 --out " + dir.string()),
            0);
  const auto manifest = read_manifest(dir / "manifest.json");
  ASSERT_EQ(manifest.populations.size(), 2U);
  std::ifstream in(manifest.base / *manifest.populations[0].train);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "time,status,x1,x2,x3");
}

TEST(CliCommands, ExitCodes) {
  const auto data = small_dataset();
  const auto out = fresh_dir("exit");
  const std::string manifest = (data / "manifest.json").string();
  EXPECT_EQ(run("fit --manifest " + manifest + " --rank 2 --sparsity 4 --out " + (out / "ok").string()), 0);
  EXPECT_EQ(run("fit --manifest " + manifest + " --rank 7 --sparsity 4 --out " + (out / "cfg").string()), 2);
  EXPECT_EQ(run("fit --manifest " + manifest + " --rank 2 --sparsity 4 --mu -1 --out " + (out / "mu").string()), 2);
  EXPECT_EQ(run("fit --no-such-flag --out " + (out / "flag").string()), 2);
  EXPECT_EQ(run("fit --manifest " + (out / "missing.json").string() + " --rank 1 --sparsity 1 --out " +
                (out / "data").string()),
            3);
  EXPECT_EQ(run("fit --manifest " + manifest + " --rank 1 --sparsity 2 --max-rho-steps 1 --out " +
                (out / "cap").string()),
            4);
  EXPECT_TRUE(fs::exists(out / "cap" / "coefficients.csv"));
}

TEST(CliCommands, PredictorMismatchIsReportedByName) {
  const auto dir = fresh_dir("mismatch");
  ASSERT_EQ(run("simulate --populations 2 --n-pattern 30 --predictors 3 --true-rank 1 --true-sparsity 2 "
                "--n-validation 20 --n-test 20 --out " + dir.string()),
            0);
  const auto manifest = read_manifest(dir / "manifest.json");
  const auto path = manifest.base / *manifest.populations[1].train;
  std::string text = read_text(path);
  text.replace(text.find("x3"), 2, "age");
  write_atomic(path, text);
  const auto err = dir / "err.txt";
  EXPECT_EQ(run("fit --manifest " + (dir / "manifest.json").string() + " --rank 1 --sparsity 2 --out " +
                    (dir / "fit").string(),
                err),
            3);
  const auto message = read_text(err);
  EXPECT_NE(message.find("x3"), std::string::npos) << message;
  EXPECT_NE(message.find("age"), std::string::npos) << message;
}

TEST(CliCommands, EvaluateWithoutTruthOmitsModelError) {
  const auto data = small_dataset();
  const auto out = fresh_dir("evaluate");
  const std::string manifest = (data / "manifest.json").string();
  ASSERT_EQ(run("fit --manifest " + manifest + " --rank 2 --sparsity 4 --out " + (out / "fit").string()), 0);
  ASSERT_EQ(run("evaluate --manifest " + manifest + " --artifact " + (out / "fit").string() + " --out " +
                (out / "plain").string()),
            0);
  const auto plain = nlohmann::json::parse(read_text(out / "plain" / "report.json"));
  EXPECT_FALSE(plain.contains("model_error"));
  EXPECT_TRUE(plain.contains("c_index"));

  ASSERT_EQ(run("evaluate --manifest " + manifest + " --artifact " + (out / "fit").string() + " --truth " +
                (data / "truth_B.csv").string() + " --sigma " + (data / "sigma.json").string() + " --out " +
                (out / "truth").string()),
            0);
  const auto with_truth = nlohmann::json::parse(read_text(out / "truth" / "report.json"));
  ASSERT_TRUE(with_truth.contains("model_error"));
  EXPECT_GE(with_truth["model_error"].get<double>(), 0.0);
}

TEST(CliCommands, SingletonCvGridSelectsItsOnlyCell) {
  const auto data = small_dataset();
  const auto out = fresh_dir("cv1");
  ASSERT_EQ(run("cv --manifest " + (data / "manifest.json").string() + " --s-grid 3 --r-grid 1 --folds 3 --out " +
                out.string()),
            0);
  const auto cv = nlohmann::json::parse(read_text(out / "cv.json"));
  EXPECT_EQ(cv["selected"]["s"].get<int>(), 3);
  EXPECT_EQ(cv["selected"]["r"].get<int>(), 1);
  EXPECT_TRUE(cv["fold_exclusive"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "coefficients.csv"));
}

TEST(CliCommands, BenchmarkRowsAndSummaries) {
  const auto out = fresh_dir("bench");
  ASSERT_EQ(run("benchmark " + kSmallSim + " --replications 3 --methods lrcox sep-ridge --out " + out.string()), 0);
  const auto rows = read_csv(out / "benchmark.csv");
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0][0], "kind");
  std::map<std::string, std::vector<double>> per_method;
  std::map<std::string, double> means;
  int replication_rows = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (r[0] == "replication") {
      ++replication_rows;
      per_method[r[2]].push_back(std::stod(r[4]));
    } else if (r[0] == "mean") {
      EXPECT_EQ(r[3], "3");
      means[r[2]] = std::stod(r[4]);
    }
  }
  EXPECT_EQ(replication_rows, 6);
  ASSERT_EQ(means.size(), 2U);
  for (const auto& [method, values] : per_method) {
    double sum = 0.0;
    for (double v : values) sum += v;
    EXPECT_NEAR(means[method], sum / 3.0, 1e-12 * (1.0 + std::abs(sum)));
  }
}

TEST(CliCommands, ProjSepRidgeHonoursRank) {
  const auto data = small_dataset();
  const auto out = fresh_dir("projsep");
  ASSERT_EQ(run("fit --manifest " + (data / "manifest.json").string() + " --method proj-sep-ridge --rank 2 --out " +
                out.string()),
            0);
  const auto coef = read_matrix_csv(out / "coefficients.csv");
  Eigen::JacobiSVD<Matrix> sv(coef.values);
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.singularValues().size(); ++k) {
    rank += sv.singularValues()(k) > 1e-9 * sv.singularValues()(0) ? 1 : 0;
  }
  EXPECT_LE(rank, 2);
}

TEST(CliCommands, FactorTransferWithSixFactors) {
  const auto dir = fresh_dir("transfer");
  ASSERT_EQ(run("simulate --populations 8 --n-pattern 80 --predictors 12 --true-rank 3 --true-sparsity 8 "
                "--n-validation 40 --n-test 80 --out " + (dir / "sim").string()),
            0);
  const std::string manifest = (dir / "sim" / "manifest.json").string();
  ASSERT_EQ(run("fit --manifest " + manifest + " --rank 6 --sparsity 10 --out " + (dir / "fit").string()), 0);
  ASSERT_EQ(run("evaluate --manifest " + manifest + " --transfer-factors " + (dir / "fit" / "factor_U.csv").string() +
                " --out " + (dir / "eval").string()),
            0);
  const auto coef = read_matrix_csv(dir / "eval" / "transfer_coefficients.csv");
  EXPECT_EQ(coef.values.rows() * coef.values.cols(), 6 * 8);
}
