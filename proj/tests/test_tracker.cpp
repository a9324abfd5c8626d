#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "dfl/runner.hpp"
#include "dfl/tracker.hpp"
#include "support/generators.hpp"

using namespace dfl;

namespace {

const Link kFlatLink(0, {0.0, 0.0}, {4.0, 0.0}, 2.4e9);

ParticleSet uniform_set(std::vector<KinematicState> states) {
  ParticleSet set;
  const double w = 1.0 / states.size();
  for (const auto& s : states) set.particles.push_back({s, w});
  set.normalized = true;
  return set;
}

WeightModel default_model() {
  WeightModel model;
  model.spectral = SpectralConfig{};
  return model;
}

}  // namespace

TEST_CASE("predict without noise is the constant-velocity map") {
  Rng rng(31);
  ProcessNoiseConfig no_noise{0.0};

  auto set = uniform_set({{0.0, 1.0, 0.0, 0.0}});
  predict(set, 0.032, no_noise, rng);
  CHECK(set.particles[0].state.px == doctest::Approx(0.032));
  CHECK(set.particles[0].state.vx == doctest::Approx(1.0));
  CHECK(set.particles[0].state.py == doctest::Approx(0.0));

  // Zero velocity stays put.
  auto still = uniform_set({{1.0, 0.0, -2.0, 0.0}});
  predict(still, 0.032, no_noise, rng);
  CHECK(still.particles[0].state.px == doctest::Approx(1.0));
  CHECK(still.particles[0].state.py == doctest::Approx(-2.0));

  // Property over random states: px' = px + Ts*vx etc., exactly.
  for (int i = 0; i < 1000; ++i) {
    KinematicState x{rng.uniform(-5, 5), rng.uniform(-2, 2), rng.uniform(-5, 5),
                     rng.uniform(-2, 2)};
    auto s = uniform_set({x});
    predict(s, 0.032, no_noise, rng);
    CHECK(s.particles[0].state.px == doctest::Approx(x.px + 0.032 * x.vx).epsilon(1e-15));
    CHECK(s.particles[0].state.vx == x.vx);
    CHECK(s.particles[0].state.py == doctest::Approx(x.py + 0.032 * x.vy).epsilon(1e-15));
    CHECK(s.particles[0].state.vy == x.vy);
  }
}

TEST_CASE("predict noise matches the discretized acceleration model") {
  Rng rng(32);
  const double ts = 0.032, sigma = 0.4;
  const int n = 100000;
  std::vector<KinematicState> states(n, KinematicState{0, 0, 0, 0});
  auto set = uniform_set(states);
  predict(set, ts, ProcessNoiseConfig{sigma}, rng);

  double pos_var = 0.0, vel_var = 0.0;
  for (const auto& p : set.particles) {
    pos_var += p.state.px * p.state.px;
    vel_var += p.state.vx * p.state.vx;
  }
  pos_var /= n;
  vel_var /= n;
  CHECK(std::sqrt(pos_var) == doctest::Approx(0.5 * ts * ts * sigma).epsilon(0.02));
  CHECK(std::sqrt(vel_var) == doctest::Approx(ts * sigma).epsilon(0.02));
}

TEST_CASE("predicted measurement per state") {
  const auto model = default_model();

  KinematicState idle{2.0, 0.4, 1.0, 0.0};
  const auto s1 = predict_measurement(idle, kFlatLink, model.body, model.spectral,
                                      PropagationState::NonFading);
  CHECK(s1.gain_db == 0.0);
  CHECK_FALSE(s1.freq_valid);

  // Constructive maximum on the LoS in reflection state.
  KinematicState on_los{1.0, 0.4, 0.0, 0.1};
  const auto s2 = predict_measurement(on_los, kFlatLink, model.body, model.spectral,
                                      PropagationState::Reflection);
  CHECK(s2.gain_db == doctest::Approx(20.0 * std::log10(1.0 + model.body.reflection.psi)));
  CHECK(s2.freq_valid);
  const Point2 centered{1.0 - 0.4 * 0.32, 0.0 - 0.1 * 0.32};
  CHECK(s2.freq_hz ==
        doctest::Approx(std::abs(model_frequency(centered, {0.4, 0.1}, kFlatLink))));

  // Central shadowing with the heading along the link: loss 2*rho*A.
  KinematicState blocking{2.0, 0.5, 0.0, 0.0};
  const auto s3 = predict_measurement(blocking, kFlatLink, model.body, model.spectral,
                                      PropagationState::Shadowing);
  CHECK(s3.gain_db == doctest::Approx(-2.0 * model.body.attenuation_db_per_m *
                                      model.body.semi_minor_m));
  CHECK_FALSE(s3.freq_valid);

  // A backed-up position on an endpoint invalidates only the frequency.
  KinematicState backed_on_tx{0.4 * 0.32, 0.4, 0.0, 0.0};
  const auto degen = predict_measurement(backed_on_tx, kFlatLink, model.body, model.spectral,
                                         PropagationState::Reflection);
  CHECK_FALSE(degen.freq_valid);
}

TEST_CASE("residual density values") {
  MeasurementNoiseConfig noise;  // diag(2.0, 1.5)

  // Mode of the bivariate density.
  const double mode = 1.0 / (2.0 * M_PI * std::sqrt(2.0 * 1.5));
  CHECK(residual_density(0.0, 0.0, noise) == doctest::Approx(mode));

  // One standard deviation in each component: mode * exp(-1).
  CHECK(residual_density(std::sqrt(2.0), std::sqrt(1.5), noise) ==
        doctest::Approx(mode * std::exp(-1.0)));

  // Marginal density when the frequency channel is missing.
  CHECK(residual_density(0.0, std::nullopt, noise) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 2.0)));

  MeasurementNoiseConfig bad{1.0, 1.0, 1.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("update weights: symmetry, fallbacks and scaling invariance") {
  const auto model = default_model();
  const std::vector<Link> links{kFlatLink};

  // Identical residuals produce identical posterior weights.
  auto set = uniform_set({{2.0, 0.5, 1.0, 0.0}, {2.0, 0.5, -1.0, 0.0}});
  std::vector<LinkObservation> obs(1);
  obs[0] = {1.0, true, 0.0, false, PropagationState::Reflection};
  REQUIRE(update_weights(set, links, obs, model));
  CHECK(set.particles[0].weight == doctest::Approx(set.particles[1].weight));

  // Scaling all prior weights by a positive constant does not change the
  // normalized result.
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = uniform_set({{2.0, 0.5, rng.uniform(-1.5, 1.5), 0.2},
                          {2.0, 0.5, rng.uniform(-1.5, 1.5), -0.2},
                          {2.5, 0.4, rng.uniform(-1.5, 1.5), 0.0}});
    auto b = a;
    const double scale = rng.uniform(0.1, 20.0);
    for (auto& p : b.particles) p.weight *= scale;
    b.normalized = false;

    std::vector<LinkObservation> o(1);
    o[0] = {rng.uniform(-8.0, 3.0), true, rng.uniform(0.5, 6.0), true,
            PropagationState::Reflection};
    REQUIRE(update_weights(a, links, o, model));
    REQUIRE(update_weights(b, links, o, model));
    normalize(a);
    normalize(b);
    for (std::size_t i = 0; i < a.particles.size(); ++i)
      CHECK(a.particles[i].weight == doctest::Approx(b.particles[i].weight).epsilon(1e-9));
  }

  // All particles in the standoff zone -> reset to uniform, reported false.
  auto doomed = uniform_set({{0.05, 0.1, 0.0, 0.1}, {3.99, 0.1, 0.01, 0.1}});
  REQUIRE_FALSE(update_weights(doomed, links, obs, model));
  CHECK(doomed.particles[0].weight == doctest::Approx(0.5));
  CHECK(doomed.particles[1].weight == doctest::Approx(0.5));
}

TEST_CASE("normalize") {
  auto set = uniform_set({{0, 0, 0, 0}, {1, 0, 0, 0}, {2, 0, 0, 0}, {3, 0, 0, 0}});
  for (auto& p : set.particles) p.weight = 1.0;
  normalize(set);
  for (const auto& p : set.particles) CHECK(p.weight == doctest::Approx(0.25));

  set.particles[0].weight = 2.0;
  set.particles[1].weight = 0.0;
  set.particles.resize(2);
  normalize(set);
  CHECK(set.particles[0].weight == doctest::Approx(1.0));
  CHECK(set.particles[1].weight == doctest::Approx(0.0));

  for (auto& p : set.particles) p.weight = 0.0;
  CHECK_THROWS_AS(normalize(set), DegenerateWeightsError);
}

TEST_CASE("normalized weights sum to one over random inputs") {
  Rng rng(34);
  for (int trial = 0; trial < 1000; ++trial) {
    ParticleSet set;
    const int n = 1 + static_cast<int>(rng.uniform(0.0, 50.0));
    for (int i = 0; i < n; ++i)
      set.particles.push_back({{0, 0, 0, 0}, std::exp(rng.uniform(-30.0, 5.0))});
    normalize(set);
    double sum = 0.0;
    for (const auto& p : set.particles) {
      CHECK(p.weight >= 0.0);
      sum += p.weight;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("systematic resampling properties") {
  Rng rng(35);

  // A single dominant particle takes over the whole set.
  {
    auto set = uniform_set({{1, 0, 0, 0}, {2, 0, 0, 0}, {3, 0, 0, 0}});
    set.particles[0].weight = 1.0;
    set.particles[1].weight = 0.0;
    set.particles[2].weight = 0.0;
    resample(set, rng);
    for (const auto& p : set.particles) CHECK(p.state.px == doctest::Approx(1.0));
  }

  // Uniform weights reproduce every particle exactly once.
  {
    std::vector<KinematicState> states;
    for (int i = 0; i < 64; ++i) states.push_back({static_cast<double>(i), 0, 0, 0});
    auto set = uniform_set(states);
    resample(set, rng);
    std::map<int, int> counts;
    for (const auto& p : set.particles) counts[static_cast<int>(p.state.px)]++;
    CHECK(counts.size() == 64);
    for (const auto& [idx, c] : counts) CHECK(c == 1);
  }

  // Offspring counts stay within one of N * weight.
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 40.0));
    ParticleSet set;
    for (int i = 0; i < n; ++i)
      set.particles.push_back({{static_cast<double>(i), 0, 0, 0}, rng.uniform(0.0, 1.0)});
    normalize(set);
    const auto weights = set.particles;
    resample(set, rng);
    REQUIRE(set.particles.size() == static_cast<std::size_t>(n));
    std::map<int, int> counts;
    for (const auto& p : set.particles) counts[static_cast<int>(p.state.px)]++;
    for (int i = 0; i < n; ++i) {
      const double expected = n * weights[i].weight;
      CHECK(std::abs(counts[i] - expected) <= 1.0 + 1e-9);
    }
    for (const auto& p : set.particles) CHECK(p.weight == doctest::Approx(1.0 / n));
  }
}

TEST_CASE("resampling preserves the weighted mean in expectation") {
  Rng weight_rng(36);
  const int n = 32;
  ParticleSet base;
  for (int i = 0; i < n; ++i)
    base.particles.push_back(
        {{weight_rng.uniform(-3.0, 3.0), 0, weight_rng.uniform(-3.0, 3.0), 0},
         weight_rng.uniform(0.0, 1.0)});
  normalize(base);

  double weighted_x = 0.0, weighted_y = 0.0;
  for (const auto& p : base.particles) {
    weighted_x += p.weight * p.state.px;
    weighted_y += p.weight * p.state.py;
  }

  const int reps = 1000;
  double mean_x = 0.0, mean_y = 0.0, m2x = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(1000, rep));
    auto set = base;
    resample(set, rng);
    const auto est = estimate(set);
    mean_x += est.px;
    mean_y += est.py;
    m2x += est.px * est.px;
  }
  mean_x /= reps;
  mean_y /= reps;
  const double se_x = std::sqrt((m2x / reps - mean_x * mean_x) / reps);
  CHECK(std::abs(mean_x - weighted_x) < 3.0 * se_x + 1e-6);
  CHECK(std::abs(mean_y - weighted_y) < 0.05);
}

TEST_CASE("estimate") {
  auto set = uniform_set({{1.0, 0.5, 2.0, -0.5}});
  const auto single = estimate(set);
  CHECK(single.px == doctest::Approx(1.0));
  CHECK(single.vy == doctest::Approx(-0.5));

  auto sym = uniform_set({{1.0, 0.5, 2.0, -0.5}, {-1.0, -0.5, -2.0, 0.5}});
  const auto zero = estimate(sym);
  CHECK(zero.px == doctest::Approx(0.0));
  CHECK(zero.vx == doctest::Approx(0.0));

  // Consistency: the mean of drawn particles converges on the distribution
  // mean as the set grows.
  Rng rng(37);
  for (int rep = 0; rep < 5; ++rep) {
    ParticleSet big;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
      big.particles.push_back({{rng.normal(0.7, 0.3), 0, rng.normal(-0.2, 0.3), 0}, 1.0 / n});
    const auto est = estimate(big);
    CHECK(est.px == doctest::Approx(0.7).epsilon(0.02));
    CHECK(est.py == doctest::Approx(-0.2).scale(1.0).epsilon(0.02));
  }

  ParticleSet empty;
  CHECK_THROWS_AS(estimate(empty), std::invalid_argument);
}

TEST_CASE("initialization samples the documented ranges") {
  Rng rng(38);
  InitConfig init;  // U(0,2), +-pi/4, perp 0.3

  const double hint = 20.0 * M_PI / 180.0;
  auto set = initialize_particles(kFlatLink, hint, init, 2000, rng);
  REQUIRE(set.size() == 2000);
  double wsum = 0.0;
  for (const auto& p : set.particles) {
    const auto local = to_link_local(p.state.position(), kFlatLink);
    CHECK(local.along >= 0.0);
    CHECK(local.along <= kFlatLink.los_length_m());
    const double speed = p.state.velocity().speed();
    CHECK(speed <= init.speed_max_mps + 1e-12);
    const double heading = p.state.velocity().heading();
    if (speed > 1e-9) {
      CHECK(heading >= hint - init.heading_spread_rad - 1e-9);
      CHECK(heading <= hint + init.heading_spread_rad + 1e-9);
    }
    wsum += p.weight;
  }
  CHECK(wsum == doctest::Approx(1.0));

  // Degenerate config collapses the velocity.
  InitConfig frozen{0.0, 0.0, 0.0};
  auto still = initialize_particles(kFlatLink, hint, frozen, 32, rng);
  for (const auto& p : still.particles) {
    CHECK(p.state.vx == doctest::Approx(0.0));
    CHECK(p.state.vy == doctest::Approx(0.0));
    CHECK(to_link_local(p.state.position(), kFlatLink).perp == doctest::Approx(0.0));
  }
}

TEST_CASE("controller follows the gating rules") {
  const std::vector<Link> links{kFlatLink};
  TrackerSettings settings;
  settings.particle_count = 64;
  settings.heading_hint_rad = 0.0;
  TrackerController controller(links, BodyModel{}, SpectralConfig{}, settings, 42);

  auto frame_with = [&](double r) {
    MeasurementFrame f;
    f.t = 0.0;
    f.links.resize(1);
    f.links[0].r_db = r;
    f.links[0].r_valid = true;
    return f;
  };
  auto states_of = [](PropagationState s) {
    return std::vector<LinkStateEstimate>{LinkStateEstimate{s, {1, 0, 0}}};
  };

  // Idle filter, quiet channel: nothing happens.
  auto idle = controller.step(frame_with(0.0), states_of(PropagationState::NonFading));
  CHECK_FALSE(idle.estimate.has_value());
  CHECK(idle.event == LifecycleEvent::None);
  CHECK_FALSE(controller.tracking());

  // Reflection alone does not start tracking.
  auto s2 = controller.step(frame_with(2.0), states_of(PropagationState::Reflection));
  CHECK_FALSE(s2.estimate.has_value());

  // Shadowing starts the filter and emits a first estimate.
  auto start = controller.step(frame_with(-7.0), states_of(PropagationState::Shadowing));
  CHECK(start.event == LifecycleEvent::StartTracking);
  REQUIRE(start.estimate.has_value());
  CHECK(controller.tracking());

  // While any link is disturbed, the filter keeps estimating.
  auto mid = controller.step(frame_with(2.0), states_of(PropagationState::Reflection));
  CHECK(mid.event == LifecycleEvent::None);
  CHECK(mid.estimate.has_value());

  // All links quiet stops it without an estimate.
  auto stop = controller.step(frame_with(0.0), states_of(PropagationState::NonFading));
  CHECK(stop.event == LifecycleEvent::StopTracking);
  CHECK_FALSE(stop.estimate.has_value());
  CHECK_FALSE(controller.tracking());
}

TEST_CASE("full pipeline is deterministic in config and seed") {
  auto cfg = default_config();
  cfg.scenario.trajectory.duration_s = 8.0;

  const auto a = run_scenario(cfg, 777);
  const auto b = run_scenario(cfg, 777);
  REQUIRE(a.track.estimates.size() == b.track.estimates.size());
  REQUIRE(!a.track.estimates.empty());
  for (std::size_t i = 0; i < a.track.estimates.size(); ++i) {
    CHECK(a.track.estimates[i].t == b.track.estimates[i].t);
    CHECK(a.track.estimates[i].state.px == b.track.estimates[i].state.px);
    CHECK(a.track.estimates[i].state.vx == b.track.estimates[i].state.vx);
    CHECK(a.track.estimates[i].state.py == b.track.estimates[i].state.py);
    CHECK(a.track.estimates[i].state.vy == b.track.estimates[i].state.vy);
  }
  CHECK(a.result.eps_x_cm == b.result.eps_x_cm);
  CHECK(a.result.eps_pct == b.result.eps_pct);

  const auto c = run_scenario(cfg, 778);
  CHECK(a.result.eps_x_cm != c.result.eps_x_cm);
}
