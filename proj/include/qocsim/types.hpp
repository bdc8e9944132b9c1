#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace qocsim {

using Tick = std::int64_t;

/// Joint-space state of the plant as reported over the status channel.
struct JointState {
  Eigen::VectorXd q;   // rad
  Eigen::VectorXd qd;  // rad/s
  Tick tick{0};
};

/// Per-joint velocity setpoint streamed by the controller.
struct VelocityCommand {
  Eigen::VectorXd qd_cmd;  // rad/s
  std::int64_t seq{0};
  Tick send_tick{0};
};

inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace qocsim
