#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "dfl/runner.hpp"
#include "dfl/sweep.hpp"

namespace dfl {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDataFormat = 3;
inline constexpr int kExitRuntime = 4;

struct SimulateOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

struct TrackOptions {
  std::string trace_path;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<bool> use_freq;
  int particle_stride = 1;
};

struct EvalOptions {
  std::string estimates_path;
  std::string truth_path;
  std::string particles_path;  // optional; empty disables the particle ratio
  std::string config_path;
  std::string out_dir;
};

struct SweepOptions {
  std::string grid_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

/// Synthesize a scenario to out/trace.csv + out/truth.csv.
int cmd_simulate(const SimulateOptions& opt, std::ostream& diag);

/// Track a trace file to out/estimates.csv plus per-step diagnostics
/// (out/link_states.csv, out/particles.csv).
int cmd_track(const TrackOptions& opt, std::ostream& diag);

/// Score estimates (and optionally particles) against truth into
/// out/result.json and out/result.csv.
int cmd_eval(const EvalOptions& opt, std::ostream& diag);

/// Run a Monte Carlo grid to out/runs.csv + out/cells.csv.
int cmd_sweep(const SweepOptions& opt, std::ostream& diag);

// Row formats used by cmd_track / cmd_eval; exposed for tooling and tests.
void write_estimates_csv(std::ostream& os, const TrackOutput& track);
void write_link_states_csv(std::ostream& os, const TrackOutput& track);
void write_particles_csv(std::ostream& os, const TrackOutput& track);

struct EstimatesFile {
  std::vector<EstimateRow> estimates;
  std::vector<double> stop_times;
};
EstimatesFile read_estimates_csv(std::istream& is);
EstimatesFile read_estimates_csv(const std::string& path);
std::vector<ParticleSnapshot> read_particles_csv(std::istream& is);
std::vector<ParticleSnapshot> read_particles_csv(const std::string& path);

}  // namespace dfl
