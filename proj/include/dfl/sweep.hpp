#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfl/runner.hpp"

namespace dfl {

/// One grid cell of a Monte Carlo sweep. Unset axes keep the base config
/// value. Scenario axes (theta, noise, receivers) key the per-run scenario
/// seeds, so cells that differ only in tracker settings replay the exact
/// same traces.
struct SweepCell {
  std::optional<double> theta_deg;
  std::optional<double> noise_std_db;
  std::optional<int> particles;
  std::optional<bool> use_freq;
  std::optional<nlohmann::json> init;
  std::optional<int> receivers;
};

struct SweepConfig {
  nlohmann::json base;  // toolkit config document
  std::vector<double> theta_deg;
  std::vector<double> noise_std_db;
  std::vector<int> particles;
  std::vector<int> use_freq;  // 0/1; vector<bool> is a poor container
  std::vector<nlohmann::json> init;
  std::vector<int> receivers;
  int runs_per_cell = 50;
};

/// Parse a sweep grid document: {"base": {...} | "base_path": "...",
/// "axes": {...}, "runs_per_cell": n}.
SweepConfig parse_sweep_config(const nlohmann::json& j, const std::string& base_dir = ".");

struct SweepRunRow {
  int cell = 0;
  int run = 0;
  RunResult result;
  int weight_resets = 0;
};

struct SweepCellSummary {
  int cell = 0;
  SweepCell spec;
  ToolkitConfig resolved;
  int runs = 0;
  int failed_runs = 0;
  double mean_eps_x_cm = 0.0, std_eps_x_cm = 0.0;
  double mean_eps_y_cm = 0.0, std_eps_y_cm = 0.0;
  double mean_eps_pct = 0.0, std_eps_pct = 0.0;
  double mean_estimates = 0.0;
};

struct SweepResult {
  std::vector<SweepCellSummary> cells;
  std::vector<SweepRunRow> runs;
};

/// Run the full grid. Runs are independent and distributed over `jobs`
/// worker threads (0 = hardware concurrency); results are deterministic in
/// (config, master_seed) regardless of scheduling. Per-run failures are
/// recorded in the cell summary rather than aborting the sweep.
SweepResult sweep(const SweepConfig& cfg, std::uint64_t master_seed, int jobs = 0);

/// Apply one cell's patches to the base document and parse it.
ToolkitConfig cell_config(const nlohmann::json& base, const SweepCell& cell);

}  // namespace dfl
