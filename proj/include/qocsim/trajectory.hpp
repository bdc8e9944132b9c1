#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qocsim/arm_model.hpp"
#include "qocsim/errors.hpp"

namespace qocsim {

struct TrajectorySample {
  Eigen::VectorXd q_ref;   // rad
  Eigen::VectorXd qd_ref;  // rad/s
};

/// Time-sampled joint-space reference. Sample i is the setpoint for tick i;
/// qd_ref[i] is the slope that carries q_ref[i] to q_ref[i+1] (zero on the
/// final sample).
struct JointTrajectory {
  double dt{0.0};
  std::vector<Eigen::VectorXd> q_ref;
  std::vector<Eigen::VectorXd> qd_ref;

  std::size_t size() const { return q_ref.size(); }
  double total_duration() const {
    return q_ref.empty() ? 0.0 : static_cast<double>(q_ref.size() - 1) * dt;
  }

  /// Reference for a wall tick: clamped to the final sample, which is held
  /// with zero feedforward velocity.
  TrajectorySample reference_at(Tick tick) const {
    const auto last = static_cast<Tick>(q_ref.size()) - 1;
    const Tick i = tick < 0 ? 0 : (tick > last ? last : tick);
    return TrajectorySample{q_ref[i], qd_ref[i]};
  }

  /// Consecutive samples may not demand more than vel_limit per joint.
  void check_feasible(const Eigen::VectorXd& vel_limit) const {
    for (std::size_t i = 0; i + 1 < q_ref.size(); ++i) {
      const Eigen::VectorXd step = (q_ref[i + 1] - q_ref[i]).cwiseAbs();
      for (int j = 0; j < step.size(); ++j) {
        if (step[j] > vel_limit[j] * dt * (1.0 + 1e-9) + 1e-15) {
          throw PlanningError("plan infeasible: joint " + std::to_string(j) +
                              " exceeds its velocity limit at sample " +
                              std::to_string(i + 1) + "; lower the speed");
        }
      }
    }
  }
};

enum class WaypointSpace { cartesian, joint };

/// Ordered path targets. Cartesian points are xyz positions (m); joint
/// points are full configurations (rad). The plan always starts from the
/// arm's current configuration, which is prepended implicitly.
struct WaypointList {
  WaypointSpace space{WaypointSpace::cartesian};
  std::vector<Eigen::VectorXd> points;

  void validate(int n_joints) const {
    if (points.size() < 2) {
      throw ConfigError("trajectory needs at least 2 waypoints, got " +
                        std::to_string(points.size()));
    }
    const int want = space == WaypointSpace::cartesian ? 3 : n_joints;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != want) {
        throw ConfigError("waypoint " + std::to_string(i) + " has " +
                          std::to_string(points[i].size()) + " components, expected " +
                          std::to_string(want));
      }
    }
  }
};

/// Velocity-level inverse kinematics step, damped least squares:
/// qd = (J^T J + damping^2 I)^-1 J^T v.
inline Eigen::VectorXd damped_least_squares(const Eigen::MatrixXd& jac,
                                            const Eigen::VectorXd& v, double damping) {
  const int n = static_cast<int>(jac.cols());
  const Eigen::MatrixXd normal =
      jac.transpose() * jac + damping * damping * Eigen::MatrixXd::Identity(n, n);
  return normal.ldlt().solve(jac.transpose() * v);
}

namespace detail {

inline std::int64_t segment_steps(double length, double speed, double dt) {
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(length / (speed * dt) - 1e-9)));
}

inline void finalize(JointTrajectory& traj, const ArmDescription& arm) {
  // qd_ref derived uniformly as the forward difference; final sample at rest.
  traj.qd_ref.clear();
  traj.qd_ref.reserve(traj.q_ref.size());
  for (std::size_t i = 0; i + 1 < traj.q_ref.size(); ++i) {
    traj.qd_ref.push_back((traj.q_ref[i + 1] - traj.q_ref[i]) / traj.dt);
  }
  traj.qd_ref.push_back(Eigen::VectorXd::Zero(arm.n_joints()));
  traj.check_feasible(arm.vel_limit);
}

}  // namespace detail

/// Straight-in-Cartesian-space plan: each waypoint pair becomes a constant
/// speed straight position segment; joint samples come from resolved-rate
/// integration through the damped Jacobian pseudoinverse. Orientation is
/// left unconstrained.
inline JointTrajectory plan_cartesian(const ArmDescription& arm,
                                      const Eigen::VectorXd& q_start,
                                      const WaypointList& waypoints, double speed,
                                      double dt, double damping = 0.05) {
  if (waypoints.space != WaypointSpace::cartesian) {
    throw ConfigError("plan_cartesian: waypoints are not cartesian");
  }
  waypoints.validate(arm.n_joints());
  check_joint_vector(arm, q_start, "plan_cartesian q_start");
  if (!(speed > 0.0)) throw ConfigError("plan_cartesian: speed must be > 0");
  if (!(dt > 0.0)) throw ConfigError("plan_cartesian: dt must be > 0");

  std::vector<Eigen::Vector3d> path;
  path.push_back(forward_kinematics(arm, q_start).position);
  for (const auto& p : waypoints.points) path.push_back(p.head<3>());

  JointTrajectory traj;
  traj.dt = dt;
  traj.q_ref.push_back(q_start);
  Eigen::VectorXd q = q_start;

  for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
    const Eigen::Vector3d a = path[seg];
    const Eigen::Vector3d b = path[seg + 1];
    const double length = (b - a).norm();
    if (length <= 1e-9) continue;
    const Eigen::Vector3d dir = (b - a) / length;
    const std::int64_t steps = detail::segment_steps(length, speed, dt);

    for (std::int64_t k = 1; k <= steps; ++k) {
      const double s = std::min(speed * static_cast<double>(k) * dt, length);
      const Eigen::Vector3d p_ref = a + s * dir;
      const Eigen::Vector3d p_now = forward_kinematics(arm, q).position;
      const Eigen::Vector3d v_des = (p_ref - p_now) / dt;
      const Eigen::MatrixXd jac_pos = jacobian(arm, q).topRows(3);
      const Eigen::VectorXd qd = damped_least_squares(jac_pos, v_des, damping);
      q += qd * dt;
      traj.q_ref.push_back(q);
    }

    const double end_err = (forward_kinematics(arm, q).position - b).norm();
    if (end_err > 1e-3) {
      throw PlanningError("waypoint " + std::to_string(seg) +
                          " unreachable: residual " + std::to_string(end_err) +
                          " m after resolved-rate integration");
    }
  }

  detail::finalize(traj, arm);
  return traj;
}

/// Straight-in-joint-space plan: linear interpolation per segment at a
/// constant joint-space speed measured in the max norm.
inline JointTrajectory plan_joint(const ArmDescription& arm,
                                  const Eigen::VectorXd& q_start,
                                  const WaypointList& waypoints, double speed,
                                  double dt) {
  if (waypoints.space != WaypointSpace::joint) {
    throw ConfigError("plan_joint: waypoints are not joint-space");
  }
  waypoints.validate(arm.n_joints());
  check_joint_vector(arm, q_start, "plan_joint q_start");
  if (!(speed > 0.0)) throw ConfigError("plan_joint: speed must be > 0");
  if (!(dt > 0.0)) throw ConfigError("plan_joint: dt must be > 0");

  std::vector<Eigen::VectorXd> path;
  path.push_back(q_start);
  for (const auto& p : waypoints.points) path.push_back(p);

  JointTrajectory traj;
  traj.dt = dt;
  traj.q_ref.push_back(q_start);

  for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
    const Eigen::VectorXd delta = path[seg + 1] - path[seg];
    const double length = delta.lpNorm<Eigen::Infinity>();
    if (length <= 1e-12) continue;
    const std::int64_t steps = detail::segment_steps(length, speed, dt);
    for (std::int64_t k = 1; k <= steps; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(steps);
      traj.q_ref.push_back(path[seg] + frac * delta);
    }
  }

  detail::finalize(traj, arm);
  return traj;
}

}  // namespace qocsim
