#include "lrcox_cli/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lrcox/errors.hpp"

namespace lrcox::cli {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const fs::path& path, std::size_t line) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_csv(const Matrix& M, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names, const std::string& corner) {
  std::string out = corner;
  for (const auto& c : col_names) out += "," + c;
  out += "\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out += row_names[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < M.cols(); ++k) out += "," + format_double(M(i, k));
    out += "\n";
  }
  return out;
}

LabeledMatrix read_matrix_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path.string() + ": empty matrix file");
  LabeledMatrix out;
  auto header = split_line(lines[0]);
  out.col_names.assign(header.begin() + 1, header.end());
  const auto cols = static_cast<Eigen::Index>(out.col_names.size());
  out.values.resize(static_cast<Eigen::Index>(lines.size() - 1), cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_line(lines[r]);
    if (static_cast<Eigen::Index>(cells.size()) != cols + 1) {
      throw DataError(path.string() + ":" + std::to_string(r + 1) + ": expected " + std::to_string(cols + 1) +
                      " fields");
    }
    out.row_names.push_back(cells[0]);
    for (Eigen::Index k = 0; k < cols; ++k) {
      out.values(static_cast<Eigen::Index>(r - 1), k) = parse_double(cells[static_cast<std::size_t>(k + 1)], path, r + 1);
    }
  }
  return out;
}

std::string population_csv(const Population& pop, const std::vector<std::string>& predictors) {
  std::string out = "time,status";
  for (const auto& name : predictors) out += "," + name;
  out += "\n";
  for (Eigen::Index i = 0; i < pop.size(); ++i) {
    out += format_double(pop.time()(i));
    out += pop.status()[static_cast<std::size_t>(i)] == 1 ? ",1" : ",0";
    for (Eigen::Index k = 0; k < pop.predictors(); ++k) out += "," + format_double(pop.covariates()(i, k));
    out += "\n";
  }
  return out;
}

PopulationFile read_population_csv(const fs::path& path, const std::string& name) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path.string() + ": empty data file");
  const auto header = split_line(lines[0]);
  if (header.size() < 3 || header[0] != "time" || header[1] != "status") {
    throw DataError(path.string() + ": header must start with time,status and list at least one predictor");
  }
  std::vector<std::string> predictors(header.begin() + 2, header.end());
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  const auto p = static_cast<Eigen::Index>(predictors.size());
  Vector time(n);
  std::vector<int> status(static_cast<std::size_t>(n));
  Matrix X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i + 1);
    const auto cells = split_line(lines[row]);
    if (static_cast<Eigen::Index>(cells.size()) != p + 2) {
      throw DataError(path.string() + ":" + std::to_string(row + 1) + ": expected " + std::to_string(p + 2) +
                      " fields");
    }
    time(i) = parse_double(cells[0], path, row + 1);
    if (cells[1] != "0" && cells[1] != "1") {
      throw DataError(path.string() + ":" + std::to_string(row + 1) + ": status must be 0 or 1");
    }
    status[static_cast<std::size_t>(i)] = cells[1] == "1" ? 1 : 0;
    for (Eigen::Index k = 0; k < p; ++k) X(i, k) = parse_double(cells[static_cast<std::size_t>(k + 2)], path, row + 1);
  }
  return PopulationFile{Population(name, std::move(time), std::move(status), std::move(X)), std::move(predictors)};
}

const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "validation";
    case SplitName::Test: return "test";
  }
  return "train";
}

Manifest read_manifest(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid manifest JSON: " + e.what());
  }
  Manifest m;
  m.base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!doc.contains("populations") || !doc["populations"].is_array() || doc["populations"].empty()) {
    throw DataError(path.string() + ": manifest needs a nonempty 'populations' array");
  }
  if (!doc.contains("predictors") || !doc["predictors"].is_array()) {
    throw DataError(path.string() + ": manifest needs a 'predictors' array");
  }
  m.predictors = doc["predictors"].get<std::vector<std::string>>();
  for (const auto& entry : doc["populations"]) {
    ManifestEntry e;
    e.name = entry.at("name").get<std::string>();
    for (auto [key, slot] : {std::pair{"train", &e.train}, std::pair{"validation", &e.validation},
                             std::pair{"test", &e.test}}) {
      if (entry.contains(key)) *slot = fs::path(entry[key].get<std::string>());
    }
    m.populations.push_back(std::move(e));
  }
  return m;
}

std::string manifest_json(const Manifest& m) {
  nlohmann::json doc;
  doc["predictors"] = m.predictors;
  doc["populations"] = nlohmann::json::array();
  for (const auto& e : m.populations) {
    nlohmann::json entry;
    entry["name"] = e.name;
    if (e.train) entry["train"] = e.train->generic_string();
    if (e.validation) entry["validation"] = e.validation->generic_string();
    if (e.test) entry["test"] = e.test->generic_string();
    doc["populations"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

bool has_split(const Manifest& m, SplitName split) {
  for (const auto& e : m.populations) {
    const auto& slot = split == SplitName::Train ? e.train : split == SplitName::Validation ? e.validation : e.test;
    if (!slot) return false;
  }
  return true;
}

std::string describe_name_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual) {
  std::ostringstream out;
  const auto n = std::max(expected.size(), actual.size());
  for (std::size_t k = 0; k < n; ++k) {
    const std::string a = k < expected.size() ? expected[k] : "<missing>";
    const std::string b = k < actual.size() ? actual[k] : "<missing>";
    if (a != b) out << "\n  column " << k + 1 << ": expected '" << a << "', found '" << b << "'";
  }
  return out.str();
}

SurvivalDataset load_split(const Manifest& m, SplitName split) {
  std::vector<Population> pops;
  for (const auto& e : m.populations) {
    const auto& slot = split == SplitName::Train ? e.train : split == SplitName::Validation ? e.validation : e.test;
    if (!slot) throw DataError("population '" + e.name + "' has no " + to_string(split) + " file in the manifest");
    const fs::path file = slot->is_absolute() ? *slot : m.base / *slot;
    auto loaded = read_population_csv(file, e.name);
    if (loaded.predictors != m.predictors) {
      throw DataError(file.string() + ": predictor header disagrees with the manifest:" +
                      describe_name_diff(m.predictors, loaded.predictors));
    }
    pops.push_back(std::move(loaded.population));
  }
  return SurvivalDataset(std::move(pops), m.predictors);
}

}  // namespace lrcox::cli
