#include "dfl/runner.hpp"

#include <algorithm>
#include <unordered_map>

namespace dfl {

TrackOutput run_tracking(std::span<const MeasurementFrame> frames, const ToolkitConfig& cfg,
                         const TrackRunOptions& options, std::uint64_t tracker_seed) {
  const auto& links = cfg.scenario.links;

  TrackerSettings settings = cfg.tracker;
  if (options.use_freq) settings.use_freq = *options.use_freq;

  TrackerController controller(links, cfg.scenario.body, cfg.spectral, settings, tracker_seed);
  std::vector<LinkStateEstimator> estimators(links.size(), LinkStateEstimator(cfg.hmm));

  TrackOutput out;
  std::vector<LinkStateEstimate> states(links.size());
  long tracked_steps = 0;

  for (const auto& frame : frames) {
    for (std::size_t l = 0; l < links.size(); ++l) {
      const auto& m = frame.links[l];
      // A link with no usable channels this tick keeps its previous state.
      states[l] = m.r_valid ? estimators[l].step(m.r_db) : estimators[l].current();
      if (options.keep_link_log) {
        LinkStateRow row;
        row.t = frame.t;
        row.link = static_cast<int>(l);
        row.state = states[l].state;
        row.posterior = states[l].posterior;
        row.r_db = m.r_db;
        row.r_valid = m.r_valid;
        row.freq_hz = m.freq.freq_hz;
        row.freq_valid = m.freq.valid;
        row.peak_power_db = m.freq.peak_power_db;
        out.link_log.push_back(row);
      }
    }

    const auto step = controller.step(frame, states);
    if (step.event == LifecycleEvent::StopTracking) out.stop_times.push_back(frame.t);
    if (step.estimate) {
      out.estimates.push_back({frame.t, *step.estimate,
                               step.event == LifecycleEvent::StartTracking
                                   ? LifecycleEvent::StartTracking
                                   : LifecycleEvent::None});
      ++tracked_steps;
      if (options.particle_stride > 0 && (tracked_steps - 1) % options.particle_stride == 0) {
        ParticleSnapshot snap;
        snap.t = frame.t;
        snap.states.reserve(controller.particles().size());
        for (const auto& p : controller.particles().particles) snap.states.push_back(p.state);
        out.snapshots.push_back(std::move(snap));
      }
    }
  }
  out.weight_resets = controller.weight_resets();
  return out;
}

RunResult score_run(const TrackOutput& track, std::span<const TruthSample> truth,
                    const BodyModel& body, std::uint64_t seed, ScoreDiagnostics* diag) {
  std::unordered_map<double, std::size_t> truth_by_time;
  truth_by_time.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth_by_time.emplace(truth[i].t, i);

  std::vector<Point2> ref, est;
  std::vector<double> abs_x, abs_y;
  long unmatched = 0;
  for (const auto& row : track.estimates) {
    const auto it = truth_by_time.find(row.t);
    if (it == truth_by_time.end()) {
      ++unmatched;
      continue;
    }
    const auto& ts = truth[it->second];
    ref.push_back(ts.position);
    est.push_back(row.state.position());
    abs_x.push_back(std::abs(ts.position.x - row.state.px));
    abs_y.push_back(std::abs(ts.position.y - row.state.py));
  }
  if (diag) diag->unmatched_estimates = unmatched;

  RunResult result;
  result.seed = seed;
  result.estimate_count = static_cast<long>(ref.size());
  if (!ref.empty()) {
    const auto [ex, ey] = mae(ref, est);
    result.eps_x_cm = ex * 100.0;
    result.eps_y_cm = ey * 100.0;
    auto stddev = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= v.size();
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      return std::sqrt(var / v.size());
    };
    result.sigma_x_cm = stddev(abs_x) * 100.0;
    result.sigma_y_cm = stddev(abs_y) * 100.0;
  }

  if (!track.snapshots.empty()) {
    // Snapshots whose timestamp fell outside the truth range cannot be
    // scored; particle_ratio would reject them.
    std::vector<ParticleSnapshot> scored;
    for (const auto& s : track.snapshots)
      if (truth_by_time.count(s.t)) scored.push_back(s);
    if (!scored.empty()) {
      result.eps_pct = particle_ratio(scored, truth, body.semi_minor_m, body.semi_major_m);
      result.eps_pct_valid = true;
    }
  }
  return result;
}

std::uint64_t tracker_seed_for(std::uint64_t run_seed) {
  return derive_seed(run_seed, 0x74726bULL);
}

ScenarioRun run_scenario(const ToolkitConfig& cfg, std::uint64_t run_seed,
                         const TrackRunOptions& options) {
  ToolkitConfig local = cfg;
  local.scenario.seed = run_seed;
  const RssTrace trace = synthesize_trace(local.scenario);
  const auto frames = replay(trace, local.replay_config());

  ScenarioRun run;
  run.track = run_tracking(frames, local, options, tracker_seed_for(run_seed));
  run.result = score_run(run.track, trace.truth, local.scenario.body, run_seed);
  return run;
}

}  // namespace dfl
