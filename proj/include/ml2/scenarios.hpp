#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ml2/io.hpp"
#include "ml2/quadrature.hpp"

namespace ml2 {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitBudget = 4 };

struct ScenarioConfig {
  std::string command;
  std::string raw;  // echoed verbatim in the report
  io::json doc;
};

// Throws Error(ConfigError) on malformed JSON, unknown commands or a
// command that disagrees with the config's own "command" field.
ScenarioConfig parse_config(const std::string& command, const std::string& raw);

struct RunResult {
  int exit_code = kExitOk;
  io::json report;  // empty on config errors
  std::vector<std::pair<std::string, std::string>> csv;  // file stem, contents
  std::string error;
};

const std::vector<std::string>& commands();

RunResult run(const ScenarioConfig& cfg);

// FNV-1a over the results payload and CSV contents.
std::string determinism_hash(const io::json& results, const std::vector<std::pair<std::string, std::string>>& csv);

// Writes report.json and <stem>.csv files; nothing is written on config errors.
void write_outputs(const RunResult& r, const std::filesystem::path& dir);

struct CounterexampleRow {
  int K = 0;
  double length = 0;
  double S = 0;  // block-1 partial sum S_K
  std::vector<QuadratureOutcome> monomials;  // |z^j|^2, j = 0, 1, 2
};

struct CounterexampleSuite {
  int N = 0;
  std::vector<CounterexampleRow> rows;
  double fit_slope = 0;      // S_K against ln K
  double fit_intercept = 0;
  double slope_limit = 0;    // c_1 J_1
  std::vector<double> block_slopes;  // c_n J_n per block
  double length_rel_change = 0;      // between the last two K
  bool lengths_cauchy = false;       // within 1%
  bool slope_ok = false;             // within 15% of slope_limit
  bool monomials_diverged = false;   // at the largest K
};

CounterexampleSuite counterexample_suite(int N, std::span<const int> K_list, const QuadratureOptions& opt = {});

}  // namespace ml2
