#pragma once

#include <stdexcept>
#include <string>

namespace qocsim {

/// Invalid configuration: bad file contents, out-of-range values,
/// dimension mismatches. Raised before a simulation starts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Trajectory planning failed: unreachable waypoint or an infeasible plan.
class PlanningError : public std::runtime_error {
 public:
  explicit PlanningError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qocsim
