#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "qocsim/errors.hpp"
#include "qocsim/kv_file.hpp"
#include "qocsim/types.hpp"

namespace qocsim {

/// One standard Denavit-Hartenberg row (revolute joint).
struct DhRow {
  double a{0.0};             // link length, m
  double alpha{0.0};         // link twist, rad
  double d{0.0};             // link offset, m
  double theta_offset{0.0};  // joint angle offset, rad
};

/// Serial-arm geometry plus per-joint velocity and position limits.
struct ArmDescription {
  std::string name;
  std::vector<DhRow> dh;
  Eigen::VectorXd vel_limit;     // rad/s, > 0
  Eigen::VectorXd pos_limit_lo;  // rad
  Eigen::VectorXd pos_limit_hi;  // rad

  int n_joints() const { return static_cast<int>(dh.size()); }

  void validate() const {
    const int n = n_joints();
    if (n < 1) throw ConfigError("arm '" + name + "': needs at least one joint");
    if (vel_limit.size() != n || pos_limit_lo.size() != n || pos_limit_hi.size() != n) {
      throw ConfigError("arm '" + name + "': limit arrays must have one entry per joint");
    }
    for (int j = 0; j < n; ++j) {
      if (!(vel_limit[j] > 0.0)) {
        throw ConfigError("arm '" + name + "': vel_limit." + std::to_string(j) +
                          " must be > 0");
      }
      if (!(pos_limit_lo[j] < pos_limit_hi[j])) {
        throw ConfigError("arm '" + name + "': pos_limit_lo." + std::to_string(j) +
                          " must be < pos_limit_hi." + std::to_string(j));
      }
    }
  }
};

/// End-effector position and orientation.
struct Pose {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
};

/// Homogeneous transform of one standard-DH joint at angle q:
/// RotZ(q + theta_offset) * TransZ(d) * TransX(a) * RotX(alpha).
inline Eigen::Matrix4d dh_transform(const DhRow& row, double q) {
  const double ct = std::cos(q + row.theta_offset);
  const double st = std::sin(q + row.theta_offset);
  const double ca = std::cos(row.alpha);
  const double sa = std::sin(row.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca,  st * sa, row.a * ct,
       st,  ct * ca, -ct * sa, row.a * st,
      0.0,       sa,       ca,      row.d,
      0.0,      0.0,      0.0,        1.0;
  return t;
}

inline void check_joint_vector(const ArmDescription& arm, const Eigen::VectorXd& q,
                               const char* what) {
  if (q.size() != arm.n_joints()) {
    throw ConfigError(std::string(what) + ": expected " +
                      std::to_string(arm.n_joints()) + " joints, got " +
                      std::to_string(q.size()));
  }
  if (!all_finite(q)) throw ConfigError(std::string(what) + ": non-finite value");
}

/// End-effector pose from chaining the DH transforms of joints 1..n.
inline Pose forward_kinematics(const ArmDescription& arm, const Eigen::VectorXd& q) {
  check_joint_vector(arm, q, "forward_kinematics");
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int j = 0; j < arm.n_joints(); ++j) {
    t = t * dh_transform(arm.dh[j], q[j]);
  }
  Pose pose;
  pose.position = t.block<3, 1>(0, 3);
  pose.rotation = t.block<3, 3>(0, 0);
  return pose;
}

/// Geometric Jacobian, 6 x n: rows 0-2 linear (m/s), rows 3-5 angular (rad/s)
/// per unit joint velocity. Column j is (z_j x (p_e - p_j), z_j) where z_j
/// and p_j are the axis and origin of joint j's frame.
inline Eigen::MatrixXd jacobian(const ArmDescription& arm, const Eigen::VectorXd& q) {
  check_joint_vector(arm, q, "jacobian");
  const int n = arm.n_joints();

  std::vector<Eigen::Vector3d> axis(n), origin(n);
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int j = 0; j < n; ++j) {
    axis[j] = t.block<3, 1>(0, 2);
    origin[j] = t.block<3, 1>(0, 3);
    t = t * dh_transform(arm.dh[j], q[j]);
  }
  const Eigen::Vector3d p_e = t.block<3, 1>(0, 3);

  Eigen::MatrixXd jac(6, n);
  for (int j = 0; j < n; ++j) {
    jac.block<3, 1>(0, j) = axis[j].cross(p_e - origin[j]);
    jac.block<3, 1>(3, j) = axis[j];
  }
  return jac;
}

/// One control tick of the kinematic plant: the commanded velocity is
/// realized instantly up to the per-joint velocity clamp, positions are
/// integrated with `substeps` explicit-Euler steps and clamped to the
/// position limits. A joint pinned at a limit reports zero velocity.
inline JointState plant_step(const ArmDescription& arm, const JointState& state,
                             const VelocityCommand& held_cmd, double dt, int substeps) {
  check_joint_vector(arm, state.q, "plant_step state");
  if (!(dt > 0.0)) throw ConfigError("plant_step: dt must be > 0");
  if (substeps < 1) throw ConfigError("plant_step: substeps must be >= 1");
  if (held_cmd.qd_cmd.size() != arm.n_joints()) {
    throw ConfigError("plant_step: command has wrong number of joints");
  }
  if (!all_finite(held_cmd.qd_cmd)) {
    throw std::domain_error("plant_step: non-finite velocity command (seq " +
                            std::to_string(held_cmd.seq) + ")");
  }

  const Eigen::VectorXd vel =
      held_cmd.qd_cmd.cwiseMax(-arm.vel_limit).cwiseMin(arm.vel_limit);

  JointState next;
  next.q = state.q;
  next.tick = state.tick + 1;
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    next.q += h * vel;
    next.q = next.q.cwiseMax(arm.pos_limit_lo).cwiseMin(arm.pos_limit_hi);
  }
  next.qd = vel;
  for (int j = 0; j < arm.n_joints(); ++j) {
    const bool pinned_lo = next.q[j] <= arm.pos_limit_lo[j] && vel[j] < 0.0;
    const bool pinned_hi = next.q[j] >= arm.pos_limit_hi[j] && vel[j] > 0.0;
    if (pinned_lo || pinned_hi) next.qd[j] = 0.0;
  }
  return next;
}

/// Planar two-link test arm: unit link lengths, generous limits.
inline ArmDescription make_planar2() {
  ArmDescription arm;
  arm.name = "planar2";
  arm.dh = {DhRow{1.0, 0.0, 0.0, 0.0}, DhRow{1.0, 0.0, 0.0, 0.0}};
  arm.vel_limit = Eigen::VectorXd::Constant(2, 2.0);
  arm.pos_limit_lo = Eigen::VectorXd::Constant(2, -2.0 * M_PI);
  arm.pos_limit_hi = Eigen::VectorXd::Constant(2, 2.0 * M_PI);
  return arm;
}

/// Arm description file: flat `key = value` with keys
/// n_joints, dh.<i>.{a,alpha,d,theta_offset}, vel_limit.<i>,
/// pos_limit_lo.<i>, pos_limit_hi.<i>. Angles rad, lengths m.
inline ArmDescription load_arm_file(const std::string& path) {
  const KvFile kv = KvFile::parse_file(path);
  ArmDescription arm;
  arm.name = path;
  const std::int64_t n = kv.require_int("n_joints");
  if (n < 1) throw ConfigError(kv.location("n_joints") + ": n_joints must be >= 1");
  arm.dh.resize(n);
  arm.vel_limit.resize(n);
  arm.pos_limit_lo.resize(n);
  arm.pos_limit_hi.resize(n);
  for (std::int64_t j = 0; j < n; ++j) {
    const std::string js = std::to_string(j);
    arm.dh[j].a = kv.require_double("dh." + js + ".a");
    arm.dh[j].alpha = kv.require_double("dh." + js + ".alpha");
    arm.dh[j].d = kv.require_double("dh." + js + ".d");
    arm.dh[j].theta_offset = kv.require_double("dh." + js + ".theta_offset");
    arm.vel_limit[j] = kv.require_double("vel_limit." + js);
    arm.pos_limit_lo[j] = kv.require_double("pos_limit_lo." + js);
    arm.pos_limit_hi[j] = kv.require_double("pos_limit_hi." + js);
  }
  kv.reject_unknown_keys();
  arm.validate();
  return arm;
}

}  // namespace qocsim
