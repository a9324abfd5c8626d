#include "dfl/rss_model.hpp"

#include <cmath>
#include <stdexcept>

namespace dfl {

double raw_rss(double gain_db, const ChannelParams& ch, Rng& rng) {
  double noise = ch.noise_std_db > 0.0 ? rng.normal(0.0, ch.noise_std_db) : 0.0;
  return ch.system_gain_db + gain_db + noise;
}

double mean_remove_and_combine(std::span<const double> samples,
                               std::span<const double> calibration_means) {
  if (samples.empty()) throw std::invalid_argument("mean_remove_and_combine: no channels");
  if (samples.size() != calibration_means.size())
    throw std::invalid_argument("mean_remove_and_combine: sample/calibration length mismatch");
  double acc = 0.0;
  for (std::size_t c = 0; c < samples.size(); ++c) acc += samples[c] - calibration_means[c];
  return acc / static_cast<double>(samples.size());
}

double two_ray_gain_db(double excess_wavelengths, double psi) {
  const double phase = 2.0 * M_PI * excess_wavelengths;
  return 10.0 * std::log10(psi * psi + 2.0 * psi * std::cos(phase) + 1.0);
}

double reflection_gain(Point2 p, const Link& link, const ReflectionParams& refl) {
  const double delta = excess_path_length(p, link);
  return two_ray_gain_db(delta / link.wavelength_m(), refl.psi);
}

double projection_half_width(const EllipseParams& e) {
  const double c = std::cos(e.rotation_rad);
  const double s = std::sin(e.rotation_rad);
  return std::sqrt(e.semi_minor_m * e.semi_minor_m * c * c +
                   e.semi_major_m * e.semi_major_m * s * s);
}

double shadow_gain(Point2 p, const Link& link, const EllipseParams& e) {
  const double a = projection_half_width(e);
  const double d = to_link_local(p, link).perp;
  if (std::abs(d) > a) return 0.0;
  const double chord = std::sqrt(a * a - d * d);
  return 2.0 * e.attenuation_db_per_m * e.semi_minor_m * e.semi_major_m * chord / (a * a);
}

double three_state_gain(PropagationState state, Point2 p, const Link& link,
                        const ReflectionParams& refl, const EllipseParams& ellipse) {
  switch (state) {
    case PropagationState::NonFading:
      return 0.0;
    case PropagationState::Reflection:
      return reflection_gain(p, link, refl);
    case PropagationState::Shadowing:
      return -shadow_gain(p, link, ellipse);
  }
  return 0.0;
}

double ellipse_link_rotation(double heading_rad, const Link& link) {
  // The chord formula's angle is measured between the LoS normal and the
  // ellipse minor axis; with the minor axis along the heading this is
  // heading - bearing + pi/2 (any pi-periodic alias works).
  return heading_rad - link.bearing_rad() + 0.5 * M_PI;
}

EllipseParams BodyModel::oriented(double heading_rad, const Link& link) const {
  return EllipseParams{semi_minor_m, semi_major_m, attenuation_db_per_m,
                       ellipse_link_rotation(heading_rad, link)};
}

PropagationState implied_link_state(Point2 p, double heading_rad, const Link& link,
                                    const BodyModel& body, int fresnel_zone_max) {
  const auto local = to_link_local(p, link);
  const double half_width = projection_half_width(body.oriented(heading_rad, link));
  if (std::abs(local.perp) <= half_width && local.along >= 0.0 &&
      local.along <= link.los_length_m())
    return PropagationState::Shadowing;
  if (is_degenerate_position(p, link)) return PropagationState::Reflection;
  if (excess_path_length(p, link) < 0.5 * fresnel_zone_max * link.wavelength_m())
    return PropagationState::Reflection;
  return PropagationState::NonFading;
}

}  // namespace dfl
