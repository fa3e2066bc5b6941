#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lrcox/cox_likelihood.hpp"

namespace lrcox::cli {

namespace fs = std::filesystem;

/// 17 significant digits, so write -> read -> write is byte-identical.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

struct LabeledMatrix {
  Matrix values;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
};

/// Header `<corner>,col...`; one row per name.
std::string matrix_csv(const Matrix& M, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names, const std::string& corner = "predictor");
LabeledMatrix read_matrix_csv(const fs::path& path);

/// Header `time,status,<predictors>`.
std::string population_csv(const Population& pop, const std::vector<std::string>& predictors);
struct PopulationFile {
  Population population;
  std::vector<std::string> predictors;
};
PopulationFile read_population_csv(const fs::path& path, const std::string& name);

struct ManifestEntry {
  std::string name;
  std::optional<fs::path> train;
  std::optional<fs::path> validation;
  std::optional<fs::path> test;
};

struct Manifest {
  std::vector<ManifestEntry> populations;
  std::vector<std::string> predictors;
  fs::path base;
};

enum class SplitName { Train, Validation, Test };
const char* to_string(SplitName s);

Manifest read_manifest(const fs::path& path);
std::string manifest_json(const Manifest& m);
bool has_split(const Manifest& m, SplitName split);
/// Loads one split for every population; headers must match the manifest's predictors.
SurvivalDataset load_split(const Manifest& m, SplitName split);

/// "a" vs "b" differences as human-readable lines.
std::string describe_name_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual);

}  // namespace lrcox::cli
