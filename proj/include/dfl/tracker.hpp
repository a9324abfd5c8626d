#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dfl/link_state_hmm.hpp"
#include "dfl/measurement.hpp"
#include "dfl/rng.hpp"
#include "dfl/rss_model.hpp"
#include "dfl/spectral.hpp"

namespace dfl {

/// Constant-velocity state [px vx py vy].
struct KinematicState {
  double px = 0.0;
  double vx = 0.0;
  double py = 0.0;
  double vy = 0.0;

  Point2 position() const { return {px, py}; }
  Velocity2 velocity() const { return {vx, vy}; }
};

struct Particle {
  KinematicState state;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  bool normalized = false;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return particles.size(); }
};

struct ProcessNoiseConfig {
  double accel_std = 0.4;  // m/s^2
};

/// 2x2 measurement noise covariance over (time-domain dB, frequency Hz).
struct MeasurementNoiseConfig {
  double rss_var = 2.0;
  double freq_var = 1.5;
  double cross_cov = 0.0;

  void validate() const;
};

struct InitConfig {
  double speed_max_mps = 2.0;
  double heading_spread_rad = M_PI / 4;
  double perp_std_m = 0.3;  // spread across the trigger link's LoS
};

// The single-bounce reflection model breaks down next to an antenna, and
// iso-path-length fringes crowd so densely there that a near-static particle
// cluster can mimic any measurement sequence. Hypotheses inside this radius
// of a transceiver are treated as model-invalid and receive zero weight.
inline constexpr double kDefaultNodeStandoffM = 0.3;

/// Constant-velocity prediction with i.i.d. acceleration noise per particle:
/// position += v*Ts + Ts^2/2 * u, velocity += Ts * u.
void predict(ParticleSet& set, double sample_interval_s, const ProcessNoiseConfig& noise, Rng& rng);

struct PredictedMeasurement {
  double gain_db = 0.0;
  double freq_hz = 0.0;  // |G|
  bool freq_valid = false;
};

/// Measurement model h(x) for one link, conditioned on the HMM state of that
/// link. The spectral prediction is only meaningful while the link is in
/// reflection state.
PredictedMeasurement predict_measurement(const KinematicState& x, const Link& link,
                                         const BodyModel& body, const SpectralConfig& spectral,
                                         PropagationState link_state);

/// Per-link observation handed to the weight update.
struct LinkObservation {
  double r_db = 0.0;
  bool r_valid = false;
  double freq_hz = 0.0;
  bool freq_valid = false;
  PropagationState state = PropagationState::NonFading;
};

/// Density of the measurement residual. With a frequency residual this is
/// the bivariate normal at (rss_residual, freq_residual); otherwise the
/// 1-D marginal of the time-domain residual.
double residual_density(double rss_residual_db, std::optional<double> freq_residual_hz,
                        const MeasurementNoiseConfig& noise);

/// Strip of the plane the person can physically occupy, e.g. the corridor
/// interior between the walls carrying the nodes. Axis-aligned in the world
/// frame; unbounded by default.
struct MonitoredRegion {
  double y_min = -1e30;
  double y_max = 1e30;

  bool contains(Point2 p) const { return p.y >= y_min && p.y <= y_max; }
};

/// Everything the weight update needs besides the particles themselves.
struct WeightModel {
  BodyModel body;
  SpectralConfig spectral;
  MeasurementNoiseConfig noise;
  bool use_freq = true;
  double node_standoff_m = kDefaultNodeStandoffM;
  MonitoredRegion region;
};

/// Multiply particle weights by the joint residual density over all links
/// (links treated as conditionally independent given the state). Particles
/// within `node_standoff_m` of any transceiver are zeroed. Returns false
/// when every weight collapsed to zero, in which case weights are reset to
/// uniform.
bool update_weights(ParticleSet& set, std::span<const Link> links,
                    std::span<const LinkObservation> observations, const WeightModel& model);

/// Scale weights to sum to one. Throws DegenerateWeightsError when the total
/// weight is zero.
void normalize(ParticleSet& set);

/// Systematic resampling; resets all weights to 1/N.
void resample(ParticleSet& set, Rng& rng);

/// Unweighted particle mean (the set is uniform after resampling).
KinematicState estimate(const ParticleSet& set);

/// Draw a fresh particle set around the trigger link: positions uniform
/// along the LoS with a small perpendicular spread, speeds U(0, v_max) and
/// headings U(hint - spread, hint + spread).
ParticleSet initialize_particles(const Link& trigger, double heading_hint_rad,
                                 const InitConfig& init, std::size_t count, Rng& rng);

struct TrackerSettings {
  std::size_t particle_count = 512;
  ProcessNoiseConfig process_noise;
  MeasurementNoiseConfig measurement_noise;
  InitConfig init;
  bool use_freq = true;
  double heading_hint_rad = 0.0;
  double node_standoff_m = kDefaultNodeStandoffM;
  MonitoredRegion region;
};

enum class LifecycleEvent { None, StartTracking, StopTracking };

struct StepResult {
  std::optional<KinematicState> estimate;
  LifecycleEvent event = LifecycleEvent::None;
};

/// Tracking lifecycle controller: gates the particle filter on the per-link
/// HMM states, runs the predict/update/resample/estimate cycle while a
/// person is present and tears the filter down when the channel goes quiet.
class TrackerController {
 public:
  TrackerController(std::vector<Link> links, BodyModel body, SpectralConfig spectral,
                    TrackerSettings settings, std::uint64_t seed);

  StepResult step(const MeasurementFrame& frame, std::span<const LinkStateEstimate> states);

  bool tracking() const { return tracking_; }
  const ParticleSet& particles() const { return set_; }
  /// Number of steps on which all weights collapsed and were reset.
  int weight_resets() const { return weight_resets_; }

 private:
  void update_pass(const MeasurementFrame& frame, std::span<const LinkStateEstimate> states);

  std::vector<Link> links_;
  BodyModel body_;
  SpectralConfig spectral_;
  TrackerSettings settings_;
  Rng rng_;
  ParticleSet set_;
  bool tracking_ = false;
  int weight_resets_ = 0;
  double sample_interval_s_ = 0.0;
  double last_t_ = 0.0;
};

}  // namespace dfl
