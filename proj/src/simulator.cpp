#include "dfl/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "dfl/rng.hpp"

namespace dfl {

void ScenarioConfig::validate() const {
  if (links.empty()) throw std::invalid_argument("scenario: at least one link required");
  if (channels < 1) throw std::invalid_argument("scenario: channels must be >= 1");
  if (!(sample_interval_s > 0.0)) throw std::invalid_argument("scenario: sample interval must be positive");
  if (!(trajectory.duration_s > 0.0)) throw std::invalid_argument("scenario: duration must be positive");
  if (trajectory.speed_mps < 0.0) throw std::invalid_argument("scenario: speed must be >= 0");
  if (noise_std_db < 0.0) throw std::invalid_argument("scenario: noise std must be >= 0");
  if (preamble_s < 0.0) throw std::invalid_argument("scenario: preamble must be >= 0");
  if (fresnel_zone_max < 1) throw std::invalid_argument("scenario: fresnel_zone_max must be >= 1");
  if (system_gain_db.size() != 1 && system_gain_db.size() != static_cast<std::size_t>(channels))
    throw std::invalid_argument("scenario: system_gain_db needs 1 or `channels` entries");
  if (!(body.reflection.psi > 0.0 && body.reflection.psi < 1.0))
    throw std::invalid_argument("scenario: psi must lie in (0, 1)");
  if (!(body.semi_minor_m > 0.0 && body.semi_minor_m <= body.semi_major_m))
    throw std::invalid_argument("scenario: ellipse requires 0 < A <= B");
  if (body.attenuation_db_per_m < 0.0)
    throw std::invalid_argument("scenario: attenuation must be >= 0");
}

double ScenarioConfig::system_gain(int channel) const {
  return system_gain_db.size() == 1 ? system_gain_db[0] : system_gain_db[channel];
}

std::vector<TruthSample> generate_trajectory(const ScenarioConfig& cfg) {
  const auto& tr = cfg.trajectory;
  const Velocity2 v{tr.speed_mps * std::cos(tr.heading_rad),
                    tr.speed_mps * std::sin(tr.heading_rad)};
  const long steps = std::lround(tr.duration_s / cfg.sample_interval_s);

  std::vector<TruthSample> out;
  out.reserve(steps + 1);
  for (long k = 0; k <= steps; ++k) {
    const double t = k * cfg.sample_interval_s;
    TruthSample s;
    s.t = t;
    s.position = {tr.start.x + v.vx * t, tr.start.y + v.vy * t};
    s.velocity = v;
    out.push_back(s);
  }
  return out;
}

PropagationState true_link_state(Point2 p, double heading_rad, const Link& link,
                                 const ScenarioConfig& cfg) {
  return implied_link_state(p, heading_rad, link, cfg.body, cfg.fresnel_zone_max);
}

RssTrace synthesize_trace(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x7261636bULL));

  const long pre_steps = std::lround(cfg.preamble_s / cfg.sample_interval_s);
  auto walk = generate_trajectory(cfg);

  RssTrace trace;
  trace.link_count = static_cast<int>(cfg.links.size());
  trace.channel_count = cfg.channels;
  trace.samples.reserve((pre_steps + walk.size()) * cfg.links.size() * cfg.channels);
  trace.truth.reserve(walk.size());

  const long total_steps = pre_steps + static_cast<long>(walk.size());
  for (long k = 0; k < total_steps; ++k) {
    const double t = k * cfg.sample_interval_s;
    const bool person_present = k >= pre_steps;

    std::vector<double> gains(cfg.links.size(), 0.0);
    if (person_present) {
      TruthSample truth = walk[k - pre_steps];
      truth.t = t;
      for (std::size_t l = 0; l < cfg.links.size(); ++l) {
        const auto state = true_link_state(truth.position, cfg.trajectory.heading_rad,
                                           cfg.links[l], cfg);
        truth.link_states.push_back(state);
        gains[l] = three_state_gain(
            state, truth.position, cfg.links[l], cfg.body.reflection,
            cfg.body.oriented(cfg.trajectory.heading_rad, cfg.links[l]));
      }
      trace.truth.push_back(std::move(truth));
    }

    for (std::size_t l = 0; l < cfg.links.size(); ++l) {
      for (int c = 0; c < cfg.channels; ++c) {
        ChannelParams ch{c, cfg.system_gain(c), cfg.noise_std_db};
        double rss = raw_rss(gains[l], ch, rng);
        if (cfg.quantize_db) rss = std::round(rss);
        trace.samples.push_back({t, static_cast<int>(l), c, rss});
      }
    }
  }
  return trace;
}

}  // namespace dfl
