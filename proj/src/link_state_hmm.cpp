#include "dfl/link_state_hmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

namespace {

double gaussian_density(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace

void HmmConfig::validate() const {
  for (const auto& row : transition) {
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("hmm: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("hmm: transition rows must sum to 1");
  }
  for (const auto& e : emission)
    if (!(e.std_sigma > 0.0) || !(e.absmean_sigma > 0.0))
      throw std::invalid_argument("hmm: emission sigmas must be positive");
  if (feature_window < 2) throw std::invalid_argument("hmm: feature_window must be >= 2");
}

HmmConfig HmmConfig::defaults(double combined_noise_std_db, double reflection_p2p_db,
                              double shadow_depth_db) {
  const double nc = std::max(combined_noise_std_db, 0.05);
  const double p2p = std::max(reflection_p2p_db, 1.0);
  const double depth = std::max(shadow_depth_db, 2.0);

  HmmConfig cfg;
  // Sticky states; a person cannot jump between empty-room and obstructed
  // without passing through the reflection zone.
  const double self = 0.98, rare = 1e-4;
  cfg.transition = TransitionMatrix{{{self, 1.0 - self - rare, rare},
                                     {(1.0 - self) / 2, self, (1.0 - self) / 2},
                                     {rare, 1.0 - self - rare, self}}};

  // s1: noise-only statistics of a length-10 window.
  cfg.emission[0] = {nc, 0.25 * nc + 0.05, 0.25 * nc, 0.25 * nc + 0.05};
  // s2: oscillation raises the windowed std, mean stays near zero.
  cfg.emission[1] = {0.30 * p2p, 0.15 * p2p + nc, 0.15 * p2p, 0.15 * p2p + nc};
  // s3: pronounced negative bias; spread is wide since the window straddles
  // the dip edges.
  cfg.emission[2] = {0.20 * depth, 0.30 * depth, 0.55 * depth, 0.25 * depth};

  cfg.feature_window = 10;
  return cfg;
}

std::array<double, 3> hmm_forward_update(const std::array<double, 3>& posterior,
                                         const TransitionMatrix& transition,
                                         const std::array<double, 3>& likelihood) {
  std::array<double, 3> predicted{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) predicted[j] += transition[i][j] * posterior[i];

  std::array<double, 3> updated{};
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    updated[j] = predicted[j] * likelihood[j];
    sum += updated[j];
  }
  if (sum <= 0.0 || !std::isfinite(sum)) {
    // Every emission underflowed; keep the predicted prior.
    updated = predicted;
    sum = predicted[0] + predicted[1] + predicted[2];
  }
  for (double& u : updated) u /= sum;
  return updated;
}

LinkStateEstimator::LinkStateEstimator(HmmConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  window_.resize(cfg_.feature_window, 0.0);
}

void LinkStateEstimator::reset() {
  filled_ = 0;
  next_ = 0;
  estimate_ = LinkStateEstimate{};
}

LinkStateEstimate LinkStateEstimator::step(double r_db) {
  window_[next_] = r_db;
  next_ = (next_ + 1) % window_.size();
  if (filled_ < window_.size()) ++filled_;

  // The windowed std is meaningless for the first couple of samples; hold
  // the prior until the features exist.
  if (filled_ < 3) return estimate_;

  double mean = 0.0;
  for (std::size_t i = 0; i < filled_; ++i) mean += window_[i];
  mean /= static_cast<double>(filled_);
  double var = 0.0;
  for (std::size_t i = 0; i < filled_; ++i) {
    const double d = window_[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(filled_);

  const double feat_std = std::sqrt(var);
  const double feat_absmean = std::abs(mean);

  std::array<double, 3> likelihood{};
  for (int s = 0; s < 3; ++s) {
    const auto& e = cfg_.emission[s];
    likelihood[s] = gaussian_density(feat_std, e.std_mean, e.std_sigma) *
                    gaussian_density(feat_absmean, e.absmean_mean, e.absmean_sigma);
  }

  estimate_.posterior = hmm_forward_update(estimate_.posterior, cfg_.transition, likelihood);
  int best = 0;
  for (int s = 1; s < 3; ++s)
    if (estimate_.posterior[s] > estimate_.posterior[best]) best = s;
  estimate_.state = static_cast<PropagationState>(best + 1);
  return estimate_;
}

GateEvent gate_events(std::span<const LinkStateEstimate> estimates, bool filter_running) {
  if (filter_running) {
    bool all_idle = true;
    for (const auto& e : estimates)
      if (e.state != PropagationState::NonFading) all_idle = false;
    return all_idle ? GateEvent::StopTracking : GateEvent::None;
  }
  for (const auto& e : estimates)
    if (e.state == PropagationState::Shadowing) return GateEvent::StartTracking;
  return GateEvent::None;
}

}  // namespace dfl
