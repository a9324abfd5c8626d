#include "dfl/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dfl/errors.hpp"

namespace dfl {

void MeasurementNoiseConfig::validate() const {
  if (!(rss_var > 0.0) || !(freq_var > 0.0))
    throw std::invalid_argument("measurement noise: variances must be positive");
  if (rss_var * freq_var - cross_cov * cross_cov <= 0.0)
    throw std::invalid_argument("measurement noise: covariance must be positive definite");
}

void predict(ParticleSet& set, double sample_interval_s, const ProcessNoiseConfig& noise,
             Rng& rng) {
  const double ts = sample_interval_s;
  const double half_ts2 = 0.5 * ts * ts;
  for (auto& p : set.particles) {
    const double ux = noise.accel_std > 0.0 ? rng.normal(0.0, noise.accel_std) : 0.0;
    const double uy = noise.accel_std > 0.0 ? rng.normal(0.0, noise.accel_std) : 0.0;
    p.state.px += ts * p.state.vx + half_ts2 * ux;
    p.state.vx += ts * ux;
    p.state.py += ts * p.state.vy + half_ts2 * uy;
    p.state.vy += ts * uy;
  }
  set.normalized = false;
}

PredictedMeasurement predict_measurement(const KinematicState& x, const Link& link,
                                         const BodyModel& body, const SpectralConfig& spectral,
                                         PropagationState link_state) {
  PredictedMeasurement out;
  const Point2 p = x.position();
  switch (link_state) {
    case PropagationState::NonFading:
      out.gain_db = 0.0;
      break;
    case PropagationState::Reflection: {
      out.gain_db = reflection_gain(p, link, body.reflection);
      const double back = 0.5 * spectral.window_len * spectral.sample_interval_s;
      const Point2 centered{p.x - x.vx * back, p.y - x.vy * back};
      if (!is_degenerate_position(centered, link)) {
        out.freq_hz = std::abs(model_frequency(centered, x.velocity(), link));
        out.freq_valid = true;
      }
      break;
    }
    case PropagationState::Shadowing:
      out.gain_db = -shadow_gain(p, link, body.oriented(x.velocity().heading(), link));
      break;
  }
  return out;
}

double residual_density(double rss_residual_db, std::optional<double> freq_residual_hz,
                        const MeasurementNoiseConfig& noise) {
  if (!freq_residual_hz) {
    const double var = noise.rss_var;
    return std::exp(-0.5 * rss_residual_db * rss_residual_db / var) /
           std::sqrt(2.0 * M_PI * var);
  }
  const double det = noise.rss_var * noise.freq_var - noise.cross_cov * noise.cross_cov;
  const double nr = rss_residual_db;
  const double nf = *freq_residual_hz;
  // nu^T Sigma^-1 nu with the 2x2 inverse written out.
  const double quad =
      (noise.freq_var * nr * nr - 2.0 * noise.cross_cov * nr * nf + noise.rss_var * nf * nf) / det;
  return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
}

bool update_weights(ParticleSet& set, std::span<const Link> links,
                    std::span<const LinkObservation> observations, const WeightModel& model) {
  if (links.size() != observations.size())
    throw std::invalid_argument("update_weights: links/observations mismatch");

  const double standoff = std::max(model.node_standoff_m, kEndpointEps);
  double total = 0.0;
  for (auto& particle : set.particles) {
    double w = particle.weight;
    if (!model.region.contains(particle.state.position())) w = 0.0;
    for (std::size_t l = 0; l < links.size() && w > 0.0; ++l) {
      const auto& obs = observations[l];
      if (!obs.r_valid) continue;
      const Point2 pos = particle.state.position();
      if (distance(pos, links[l].tx) < standoff || distance(pos, links[l].rx) < standoff) {
        w = 0.0;  // inside the model-invalid zone around a transceiver
        break;
      }
      const auto pred =
          predict_measurement(particle.state, links[l], model.body, model.spectral, obs.state);
      std::optional<double> freq_residual;
      if (model.use_freq && obs.freq_valid && pred.freq_valid)
        freq_residual = std::abs(obs.freq_hz) - pred.freq_hz;
      w *= residual_density(obs.r_db - pred.gain_db, freq_residual, model.noise);
    }
    particle.weight = w;
    total += w;
  }
  set.normalized = false;

  if (total <= 0.0 || !std::isfinite(total)) {
    const double uniform = 1.0 / static_cast<double>(set.size());
    for (auto& p : set.particles) p.weight = uniform;
    set.normalized = true;
    return false;
  }
  return true;
}

void normalize(ParticleSet& set) {
  double total = 0.0;
  for (const auto& p : set.particles) total += p.weight;
  if (total <= 0.0 || !std::isfinite(total))
    throw DegenerateWeightsError("normalize: total particle weight is zero");
  for (auto& p : set.particles) p.weight /= total;
  set.normalized = true;
}

void resample(ParticleSet& set, Rng& rng) {
  const std::size_t n = set.size();
  if (n == 0) throw std::invalid_argument("resample: empty particle set");
  if (!set.normalized) normalize(set);

  double u = rng.uniform();
  while (u == 0.0) u = rng.uniform();  // keep offsets strictly inside the strata

  std::vector<Particle> out;
  out.reserve(n);
  const double uniform = 1.0 / static_cast<double>(n);
  std::size_t i = 0;
  double cumulative = set.particles[0].weight;
  for (std::size_t j = 0; j < n; ++j) {
    const double target = (static_cast<double>(j) + u) * uniform;
    while (cumulative < target && i + 1 < n) {
      ++i;
      cumulative += set.particles[i].weight;
    }
    out.push_back({set.particles[i].state, uniform});
  }
  set.particles = std::move(out);
  set.normalized = true;
}

KinematicState estimate(const ParticleSet& set) {
  if (set.particles.empty()) throw std::invalid_argument("estimate: empty particle set");
  KinematicState mean;
  for (const auto& p : set.particles) {
    mean.px += p.state.px;
    mean.vx += p.state.vx;
    mean.py += p.state.py;
    mean.vy += p.state.vy;
  }
  const double inv = 1.0 / static_cast<double>(set.size());
  mean.px *= inv;
  mean.vx *= inv;
  mean.py *= inv;
  mean.vy *= inv;
  return mean;
}

ParticleSet initialize_particles(const Link& trigger, double heading_hint_rad,
                                 const InitConfig& init, std::size_t count, Rng& rng) {
  ParticleSet set;
  set.particles.reserve(count);
  const double los = trigger.los_length_m();
  const double uniform = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Stratified draw of the uniform along-position: same distribution,
    // but every stretch of the LoS is covered even with few particles.
    const double along = (static_cast<double>(i) + rng.uniform()) * uniform * los;
    const double perp = init.perp_std_m > 0.0 ? rng.normal(0.0, init.perp_std_m) : 0.0;
    const Point2 p = from_link_local({along, perp}, trigger);
    const double speed = rng.uniform(0.0, init.speed_max_mps);
    const double heading = rng.uniform(heading_hint_rad - init.heading_spread_rad,
                                       heading_hint_rad + init.heading_spread_rad);
    Particle particle;
    particle.state = {p.x, speed * std::cos(heading), p.y, speed * std::sin(heading)};
    particle.weight = uniform;
    set.particles.push_back(particle);
  }
  set.normalized = true;
  return set;
}

TrackerController::TrackerController(std::vector<Link> links, BodyModel body,
                                     SpectralConfig spectral, TrackerSettings settings,
                                     std::uint64_t seed)
    : links_(std::move(links)),
      body_(body),
      spectral_(spectral),
      settings_(settings),
      rng_(seed),
      sample_interval_s_(spectral.sample_interval_s) {
  settings_.measurement_noise.validate();
  set_.rng_seed = seed;
}

void TrackerController::update_pass(const MeasurementFrame& frame,
                                    std::span<const LinkStateEstimate> states) {
  std::vector<LinkObservation> obs(links_.size());
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const auto& m = frame.links[l];
    obs[l] = {m.r_db, m.r_valid, m.freq.freq_hz, m.freq.valid, states[l].state};
  }
  WeightModel model{body_,
                    spectral_,
                    settings_.measurement_noise,
                    settings_.use_freq,
                    settings_.node_standoff_m,
                    settings_.region};
  if (!update_weights(set_, links_, obs, model)) ++weight_resets_;
  normalize(set_);
}

StepResult TrackerController::step(const MeasurementFrame& frame,
                                   std::span<const LinkStateEstimate> states) {
  if (states.size() != links_.size() || frame.links.size() != links_.size())
    throw std::invalid_argument("tracker step: per-link inputs do not match link count");

  StepResult result;
  if (tracking_) {
    if (gate_events(states, true) == GateEvent::StopTracking) {
      tracking_ = false;
      set_.particles.clear();
      result.event = LifecycleEvent::StopTracking;
      return result;
    }
    const double dt = frame.t > last_t_ ? frame.t - last_t_ : sample_interval_s_;
    predict(set_, dt, settings_.process_noise, rng_);
    update_pass(frame, states);
    resample(set_, rng_);
    result.estimate = estimate(set_);
    last_t_ = frame.t;
    return result;
  }

  if (gate_events(states, false) == GateEvent::StartTracking) {
    std::size_t trigger = 0;
    for (std::size_t l = 0; l < states.size(); ++l)
      if (states[l].state == PropagationState::Shadowing) {
        trigger = l;
        break;
      }
    set_ = initialize_particles(links_[trigger], settings_.heading_hint_rad, settings_.init,
                                settings_.particle_count, rng_);
    const std::vector<Particle> sampled = set_.particles;

    // One measurement pass on the triggering frame. With the frequency
    // channel enabled it carries velocity information, so the velocity
    // estimate v-hat (the weighted mean over the updated set) is
    // substituted into the state while the sampled positions are kept:
    // position diversity survives the first update and hypotheses needing
    // implausible velocities never take root. Without the frequency channel
    // the pass is velocity-blind and the substitution would only inject the
    // prior mean, so the baseline keeps the plain bootstrap update.
    update_pass(frame, states);
    if (settings_.use_freq) {
      KinematicState fitted;
      for (const auto& p : set_.particles) {
        fitted.vx += p.weight * p.state.vx;
        fitted.vy += p.weight * p.state.vy;
      }
      for (std::size_t i = 0; i < sampled.size(); ++i) {
        set_.particles[i].state = {sampled[i].state.px, fitted.vx, sampled[i].state.py,
                                   fitted.vy};
        set_.particles[i].weight = 1.0 / static_cast<double>(sampled.size());
      }
      set_.normalized = true;
    } else {
      resample(set_, rng_);
    }

    result.estimate = estimate(set_);
    result.event = LifecycleEvent::StartTracking;
    tracking_ = true;
    last_t_ = frame.t;
  }
  return result;
}

}  // namespace dfl
