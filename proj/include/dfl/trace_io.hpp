#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dfl/measurement.hpp"
#include "dfl/simulator.hpp"

namespace dfl {

// CSV formats (UTF-8, LF, '.' decimal separator):
//   trace: t,link,channel,rss_dbm
//   truth: t,px,py,vx,vy,state_link0,state_link1,...
// Doubles are written in shortest round-trip form so that a written file
// replays identically to the in-memory trace.

void write_trace_csv(std::ostream& os, const RssTrace& trace);
void write_truth_csv(std::ostream& os, const RssTrace& trace);
void write_trace_csv(const std::string& path, const RssTrace& trace);
void write_truth_csv(const std::string& path, const RssTrace& trace);

/// Parse a trace file. Throws DataFormatError with the offending line number
/// on malformed input.
RssTrace read_trace_csv(std::istream& is);
RssTrace read_trace_csv(const std::string& path);

std::vector<TruthSample> read_truth_csv(std::istream& is);
std::vector<TruthSample> read_truth_csv(const std::string& path);

struct ReplayConfig {
  double calibration_window_s = 5.0;
  SpectralConfig spectral;
};

/// Turn a raw trace into the per-link measurement stream: estimate
/// per-channel calibration means over the leading window, then emit one
/// frame per sample instant with the combined RSS and the windowed spectral
/// peak of each link. Sample instants with missing channels are combined
/// over whatever is available.
std::vector<MeasurementFrame> replay(const RssTrace& trace, const ReplayConfig& cfg);

}  // namespace dfl
