#pragma once

#include <cstdint>
#include <vector>

#include "dfl/geometry.hpp"
#include "dfl/rss_model.hpp"

namespace dfl {

struct TrajectoryConfig {
  Point2 start;
  double speed_mps = 0.5;
  double heading_rad = 0.0;
  double duration_s = 10.0;
};

struct ScenarioConfig {
  std::vector<Link> links;
  int channels = 16;
  double sample_interval_s = 0.032;
  TrajectoryConfig trajectory;
  double noise_std_db = 2.0;
  std::vector<double> system_gain_db{-50.0};  // one entry, or one per channel
  BodyModel body;
  double preamble_s = 5.0;   // empty-room lead-in before the walk starts
  int fresnel_zone_max = 12;  // reflection state reaches this Fresnel zone
  bool quantize_db = false;   // round emitted RSS to integer dB
  std::uint64_t seed = 1;

  void validate() const;
  double system_gain(int channel) const;
};

struct TruthSample {
  double t = 0.0;
  Point2 position;
  Velocity2 velocity;
  std::vector<PropagationState> link_states;
};

struct TraceSample {
  double t = 0.0;
  int link = 0;
  int channel = 0;
  double rss_db = 0.0;
};

/// Synthesized scenario: raw per-channel samples plus the ground truth for
/// the walking phase. Trace timestamps cover preamble + walk; truth rows
/// start when the person does.
struct RssTrace {
  std::vector<TraceSample> samples;
  std::vector<TruthSample> truth;
  int link_count = 0;
  int channel_count = 0;
};

/// Constant-velocity walk sampled at the scenario interval:
/// p(t) = start + v*t for t = 0, Ts, ..., duration.
std::vector<TruthSample> generate_trajectory(const ScenarioConfig& cfg);

/// True propagation state of one link for a person at p moving along
/// `heading`: shadowing while the body ellipse covers the LoS segment,
/// reflection inside the configured Fresnel zone, non-fading beyond.
PropagationState true_link_state(Point2 p, double heading_rad, const Link& link,
                                 const ScenarioConfig& cfg);

/// Full forward synthesis of a scenario; deterministic in cfg.seed.
RssTrace synthesize_trace(const ScenarioConfig& cfg);

}  // namespace dfl
