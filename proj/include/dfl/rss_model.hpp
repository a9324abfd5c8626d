#pragma once

#include <span>

#include "dfl/geometry.hpp"
#include "dfl/rng.hpp"

namespace dfl {

/// One IEEE 802.15.4 frequency channel as seen by the receiver.
struct ChannelParams {
  int channel_id = 0;
  double system_gain_db = -50.0;  // radio + environment gain P(c)
  double noise_std_db = 0.0;
};

/// Amplitude of the reflected component relative to the LoS component.
struct ReflectionParams {
  double psi = 0.4;  // in (0, 1)
};

/// Uniform ellipse standing in for the person's horizontal cross section.
/// rotation_rad is the projection angle used by the chord formula; see
/// ellipse_link_rotation() for the mapping from a walking heading.
struct EllipseParams {
  double semi_minor_m = 0.15;          // A
  double semi_major_m = 0.25;          // B
  double attenuation_db_per_m = 25.0;  // rho
  double rotation_rad = 0.0;           // theta
};

enum class PropagationState : int {
  NonFading = 1,   // s1: empty channel, noise only
  Reflection = 2,  // s2: person near but off the LoS
  Shadowing = 3,   // s3: person obstructing the LoS
};

/// Spatial parameters of the person model shared by the forward simulator
/// and the tracker's measurement prediction.
struct BodyModel {
  ReflectionParams reflection;
  double semi_minor_m = 0.15;
  double semi_major_m = 0.25;
  double attenuation_db_per_m = 25.0;

  EllipseParams oriented(double heading_rad, const Link& link) const;
};

/// One raw RSS sample: system gain + channel gain + receiver noise.
double raw_rss(double gain_db, const ChannelParams& ch, Rng& rng);

/// Average of per-channel deviations from the calibration means.
/// Throws std::invalid_argument on length mismatch or empty input.
double mean_remove_and_combine(std::span<const double> samples,
                               std::span<const double> calibration_means);

/// Two-path interference gain as a function of the excess path length in
/// carrier wavelengths: 10*log10(psi^2 + 2*psi*cos(2*pi*delta/lambda) + 1).
double two_ray_gain_db(double excess_wavelengths, double psi);

/// Reflection-state gain g2 at position p.
double reflection_gain(Point2 p, const Link& link, const ReflectionParams& refl);

/// Half-width of the ellipse projection at the configured rotation:
/// a(theta) = sqrt(A^2 cos^2 theta + B^2 sin^2 theta).
double projection_half_width(const EllipseParams& e);

/// Attenuation magnitude (>= 0) of the LoS chord through the ellipse
/// centered at p. Zero when the ray misses the ellipse. The forward model
/// applies this with a negative sign.
double shadow_gain(Point2 p, const Link& link, const EllipseParams& e);

/// Channel gain g(k) for the given propagation state: 0 / g2 / -g3.
double three_state_gain(PropagationState state, Point2 p, const Link& link,
                        const ReflectionParams& refl, const EllipseParams& ellipse);

/// Chord-formula rotation for a person whose ellipse minor axis is aligned
/// with their walking heading.
double ellipse_link_rotation(double heading_rad, const Link& link);

/// Propagation state implied by a person at p moving along `heading`:
/// shadowing while the body ellipse covers the LoS segment, reflection
/// inside `fresnel_zone_max` zones, non-fading beyond.
PropagationState implied_link_state(Point2 p, double heading_rad, const Link& link,
                                    const BodyModel& body, int fresnel_zone_max);

}  // namespace dfl
