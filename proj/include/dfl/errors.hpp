#pragma once

#include <stdexcept>
#include <string>

namespace dfl {

/// Thrown when a position coincides with a link endpoint and the requested
/// quantity is undefined there.
struct DegeneratePositionError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Thrown by normalize() when the total particle weight is zero.
struct DegenerateWeightsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or unreadable configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data file (CLI exit code 3). Carries a line number when
/// the problem is tied to a specific row.
struct DataFormatError : std::runtime_error {
  DataFormatError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_number(line) {}
  long line_number;
};

}  // namespace dfl
