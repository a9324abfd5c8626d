#pragma once

#include <array>
#include <span>
#include <vector>

#include "dfl/rss_model.hpp"

namespace dfl {

using TransitionMatrix = std::array<std::array<double, 3>, 3>;

/// Gaussian emission model for the two window features of one state:
/// the windowed standard deviation and the windowed |mean| of r(k).
struct StateEmission {
  double std_mean = 0.0;
  double std_sigma = 1.0;
  double absmean_mean = 0.0;
  double absmean_sigma = 1.0;
};

struct HmmConfig {
  TransitionMatrix transition{};
  std::array<StateEmission, 3> emission{};  // indexed s1, s2, s3
  int feature_window = 10;

  void validate() const;

  /// Defaults scaled to the scenario: `combined_noise_std_db` is the noise
  /// std of the channel-combined measurement, `reflection_p2p_db` the
  /// peak-to-peak swing of the reflection gain and `shadow_depth_db` the
  /// typical shadowing loss.
  static HmmConfig defaults(double combined_noise_std_db, double reflection_p2p_db,
                            double shadow_depth_db);
};

struct LinkStateEstimate {
  PropagationState state = PropagationState::NonFading;
  std::array<double, 3> posterior{1.0 / 3, 1.0 / 3, 1.0 / 3};
};

/// One forward-filter update: posterior' ~ likelihood .* (A^T posterior),
/// renormalized. Falls back to the predicted prior when every likelihood
/// underflows to zero.
std::array<double, 3> hmm_forward_update(const std::array<double, 3>& posterior,
                                         const TransitionMatrix& transition,
                                         const std::array<double, 3>& likelihood);

/// Causal three-state estimator for a single link. Feed one combined RSS
/// sample per tick; features are computed over a trailing window.
class LinkStateEstimator {
 public:
  explicit LinkStateEstimator(HmmConfig cfg);

  LinkStateEstimate step(double r_db);
  const LinkStateEstimate& current() const { return estimate_; }
  void reset();

 private:
  HmmConfig cfg_;
  std::vector<double> window_;  // ring buffer
  std::size_t filled_ = 0;
  std::size_t next_ = 0;
  LinkStateEstimate estimate_;
};

enum class GateEvent { None, StartTracking, StopTracking };

/// Tracking lifecycle rule: start when any link is shadowed and the filter
/// is idle, stop when every link is non-fading and the filter is running.
GateEvent gate_events(std::span<const LinkStateEstimate> estimates, bool filter_running);

}  // namespace dfl
