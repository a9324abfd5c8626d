#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dfl/errors.hpp"

namespace dfl {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Positions within this distance of a transceiver are treated as coincident
// with it; the reflection geometry is undefined there.
inline constexpr double kEndpointEps = 1e-9;  // m

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

struct Velocity2 {
  double vx = 0.0;
  double vy = 0.0;

  double speed() const { return std::hypot(vx, vy); }
  double heading() const { return std::atan2(vy, vx); }
};

/// A TX/RX transceiver pair. Wavelength is derived from the carrier so the
/// two can never disagree.
struct Link {
  int id = 0;
  Point2 tx;
  Point2 rx{1.0, 0.0};
  double carrier_frequency_hz = 2.4e9;

  Link() = default;
  Link(int id_, Point2 tx_, Point2 rx_, double carrier_hz)
      : id(id_), tx(tx_), rx(rx_), carrier_frequency_hz(carrier_hz) {
    if (!(carrier_frequency_hz > 0.0))
      throw std::invalid_argument("link " + std::to_string(id) + ": carrier frequency must be positive");
    if (distance(tx, rx) <= 0.0)
      throw std::invalid_argument("link " + std::to_string(id) + ": tx and rx coincide");
  }

  double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }
  double los_length_m() const { return distance(tx, rx); }
  /// Angle of the TX->RX direction in the world frame.
  double bearing_rad() const { return std::atan2(rx.y - tx.y, rx.x - tx.x); }
};

/// Coordinates of a point in the frame of a link: `along` measured from TX
/// down the line of sight, `perp` positive on the left of the TX->RX
/// direction.
struct LinkLocalCoords {
  double along = 0.0;  // m
  double perp = 0.0;   // m
};

inline LinkLocalCoords to_link_local(Point2 p, const Link& link) {
  const double len = link.los_length_m();
  const Point2 u = (1.0 / len) * (link.rx - link.tx);
  const Point2 d = p - link.tx;
  return {dot(d, u), cross(u, d)};
}

inline Point2 from_link_local(LinkLocalCoords c, const Link& link) {
  const double len = link.los_length_m();
  const Point2 u = (1.0 / len) * (link.rx - link.tx);
  const Point2 n{-u.y, u.x};  // left normal
  return link.tx + c.along * u + c.perp * n;
}

inline bool is_degenerate_position(Point2 p, const Link& link) {
  return distance(p, link.tx) < kEndpointEps || distance(p, link.rx) < kEndpointEps;
}

namespace detail {
inline void require_off_endpoints(Point2 p, const Link& link, const char* op) {
  if (is_degenerate_position(p, link))
    throw DegeneratePositionError(std::string(op) + ": position coincides with a link endpoint");
}
}  // namespace detail

/// Extra distance travelled by the single-bounce path reflected at p,
/// relative to the direct TX->RX path. Zero exactly on the closed LoS
/// segment.
inline double excess_path_length(Point2 p, const Link& link) {
  detail::require_off_endpoints(p, link, "excess_path_length");
  const double d = distance(p, link.rx) + distance(p, link.tx) - link.los_length_m();
  return d < 0.0 ? 0.0 : d;  // clamp roundoff on the segment
}

/// Time derivative of the excess path length for a reflector at p moving
/// with velocity v: (unit(p-rx) + unit(p-tx)) . v.
inline double path_length_rate(Point2 p, Velocity2 v, const Link& link) {
  detail::require_off_endpoints(p, link, "path_length_rate");
  const Point2 to_rx = p - link.rx;
  const Point2 to_tx = p - link.tx;
  const double nrx = norm(to_rx);
  const double ntx = norm(to_tx);
  const Point2 sum{to_rx.x / nrx + to_tx.x / ntx, to_rx.y / nrx + to_tx.y / ntx};
  return sum.x * v.vx + sum.y * v.vy;
}

/// 1-based Fresnel zone of p: zone n covers excess path lengths in
/// [(n-1)*lambda/2, n*lambda/2).
inline int fresnel_zone_index(Point2 p, const Link& link) {
  const double delta = excess_path_length(p, link);
  const double half_wave = 0.5 * link.wavelength_m();
  return static_cast<int>(std::floor(delta / half_wave)) + 1;
}

}  // namespace dfl
