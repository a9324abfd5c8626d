#pragma once

#include <vector>

#include "dfl/spectral.hpp"

namespace dfl {

/// Combined per-link measurement for one sample instant: the mean-removed,
/// channel-combined RSS and the windowed spectral peak.
struct LinkMeasurement {
  double r_db = 0.0;
  bool r_valid = false;      // false when no channel sample was available
  int channels_used = 0;
  FrequencyMeasurement freq;  // invalid until the analysis window has filled
};

struct MeasurementFrame {
  double t = 0.0;
  std::vector<LinkMeasurement> links;
};

}  // namespace dfl
