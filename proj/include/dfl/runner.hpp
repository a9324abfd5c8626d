#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "dfl/config.hpp"
#include "dfl/metrics.hpp"

namespace dfl {

struct EstimateRow {
  double t = 0.0;
  KinematicState state;
  LifecycleEvent event = LifecycleEvent::None;  // StartTracking on the first row of a segment
};

struct LinkStateRow {
  double t = 0.0;
  int link = 0;
  PropagationState state = PropagationState::NonFading;
  std::array<double, 3> posterior{};
  double r_db = 0.0;
  bool r_valid = false;
  double freq_hz = 0.0;
  bool freq_valid = false;
  double peak_power_db = 0.0;
};

struct TrackOutput {
  std::vector<EstimateRow> estimates;
  std::vector<double> stop_times;
  std::vector<LinkStateRow> link_log;      // only when requested
  std::vector<ParticleSnapshot> snapshots;  // post-resample, at the given stride
  int weight_resets = 0;
};

struct TrackRunOptions {
  std::optional<bool> use_freq;  // overrides the config when set
  int particle_stride = 1;       // 0 disables snapshots
  bool keep_link_log = false;
};

/// Run the HMM gate + particle filter over a measurement stream.
TrackOutput run_tracking(std::span<const MeasurementFrame> frames, const ToolkitConfig& cfg,
                         const TrackRunOptions& options, std::uint64_t tracker_seed);

/// Score a tracking run against ground truth. Estimates are matched to truth
/// rows by timestamp; rows without a truth match are dropped and counted.
struct ScoreDiagnostics {
  long unmatched_estimates = 0;
};
RunResult score_run(const TrackOutput& track, std::span<const TruthSample> truth,
                    const BodyModel& body, std::uint64_t seed,
                    ScoreDiagnostics* diag = nullptr);

/// Tracker RNG stream for a given run seed; the CLI `track` command and the
/// in-memory pipeline use the same derivation so their outputs agree.
std::uint64_t tracker_seed_for(std::uint64_t run_seed);

/// Full in-memory pipeline: synthesize the scenario (scenario seed =
/// run_seed), replay it into measurements, track, and score. Deterministic
/// in (cfg, run_seed).
struct ScenarioRun {
  TrackOutput track;
  RunResult result;
};
ScenarioRun run_scenario(const ToolkitConfig& cfg, std::uint64_t run_seed,
                         const TrackRunOptions& options = {});

}  // namespace dfl
