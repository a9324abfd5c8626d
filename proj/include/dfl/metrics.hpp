#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dfl/simulator.hpp"
#include "dfl/tracker.hpp"

namespace dfl {

/// Per-run evaluation summary (errors in centimeters).
struct RunResult {
  double eps_x_cm = 0.0;
  double eps_y_cm = 0.0;
  double sigma_x_cm = 0.0;
  double sigma_y_cm = 0.0;
  double eps_pct = 0.0;
  bool eps_pct_valid = false;
  long estimate_count = 0;
  std::uint64_t seed = 0;
};

/// Mean absolute coordinate errors in meters over aligned sequences.
/// Throws std::invalid_argument on length mismatch or empty input.
std::pair<double, double> mae(std::span<const Point2> truth, std::span<const Point2> estimates);

/// Membership test against the person ellipse centered at `center` with the
/// minor axis along `heading`.
bool ellipse_contains(Point2 p, Point2 center, double heading_rad, double semi_minor_m,
                      double semi_major_m);

struct ParticleSnapshot {
  double t = 0.0;
  std::vector<KinematicState> states;
};

/// Percentage of particles inside the true person ellipse, pooled over all
/// snapshots. Each snapshot is matched to the truth sample with the same
/// timestamp; ellipse orientation follows the true heading.
double particle_ratio(std::span<const ParticleSnapshot> snapshots,
                      std::span<const TruthSample> truth, double semi_minor_m,
                      double semi_major_m);

}  // namespace dfl
