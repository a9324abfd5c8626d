#include "dfl/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dfl {

std::pair<double, double> mae(std::span<const Point2> truth, std::span<const Point2> estimates) {
  if (truth.size() != estimates.size())
    throw std::invalid_argument("mae: truth/estimate sequences are not aligned");
  if (truth.empty()) throw std::invalid_argument("mae: empty sequences");
  double ex = 0.0, ey = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    ex += std::abs(truth[k].x - estimates[k].x);
    ey += std::abs(truth[k].y - estimates[k].y);
  }
  const double inv = 1.0 / static_cast<double>(truth.size());
  return {ex * inv, ey * inv};
}

bool ellipse_contains(Point2 p, Point2 center, double heading_rad, double semi_minor_m,
                      double semi_major_m) {
  const double c = std::cos(heading_rad);
  const double s = std::sin(heading_rad);
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  // Rotate into the person frame: x along heading (minor axis).
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  const double a = u / semi_minor_m;
  const double b = v / semi_major_m;
  return a * a + b * b <= 1.0;
}

double particle_ratio(std::span<const ParticleSnapshot> snapshots,
                      std::span<const TruthSample> truth, double semi_minor_m,
                      double semi_major_m) {
  if (snapshots.empty()) return 0.0;

  std::unordered_map<double, std::size_t> by_time;
  by_time.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) by_time.emplace(truth[i].t, i);

  long inside = 0;
  long total = 0;
  for (const auto& snap : snapshots) {
    const auto it = by_time.find(snap.t);
    if (it == by_time.end())
      throw std::invalid_argument("particle_ratio: snapshot has no matching truth sample");
    const auto& ref = truth[it->second];
    const double heading = ref.velocity.heading();
    for (const auto& st : snap.states) {
      if (ellipse_contains(st.position(), ref.position, heading, semi_minor_m, semi_major_m))
        ++inside;
      ++total;
    }
  }
  return total > 0 ? 100.0 * static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

}  // namespace dfl
