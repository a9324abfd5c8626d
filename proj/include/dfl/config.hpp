#pragma once

#include <string>

#include <json.hpp>

#include "dfl/link_state_hmm.hpp"
#include "dfl/simulator.hpp"
#include "dfl/spectral.hpp"
#include "dfl/tracker.hpp"
#include "dfl/trace_io.hpp"

namespace dfl {

/// Fully resolved toolkit configuration: scenario synthesis, measurement
/// processing and tracking parameters. Every field has a default; a JSON
/// config only needs to name what it changes.
struct ToolkitConfig {
  ScenarioConfig scenario;
  SpectralConfig spectral;
  double calibration_window_s = 5.0;
  HmmConfig hmm;
  TrackerSettings tracker;

  ReplayConfig replay_config() const { return {calibration_window_s, spectral}; }
};

ToolkitConfig default_config();

/// Parse a (possibly partial) JSON document. Unknown keys are rejected.
/// Throws ConfigError on any problem.
ToolkitConfig parse_config(const nlohmann::json& j);

/// Load and parse a config file. Throws ConfigError on IO or parse errors.
ToolkitConfig load_config(const std::string& path);

/// Complete JSON snapshot; parse_config(to_json(cfg)) reproduces cfg
/// exactly, which is what makes manifests replayable.
nlohmann::json to_json(const ToolkitConfig& cfg);

}  // namespace dfl
