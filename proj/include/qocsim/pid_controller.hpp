#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "qocsim/errors.hpp"
#include "qocsim/trajectory.hpp"
#include "qocsim/types.hpp"

namespace qocsim {

/// Per-joint PID gains acting on position error (rad), producing rad/s.
struct PidGains {
  Eigen::VectorXd kp;       // 1/s
  Eigen::VectorXd ki;       // 1/s^2
  Eigen::VectorXd kd;       // dimensionless
  Eigen::VectorXd i_clamp;  // rad*s, bound on the error integral

  static PidGains uniform(int n_joints, double kp = 10.0, double ki = 0.5,
                          double kd = 0.1, double i_clamp = 1.0) {
    PidGains g;
    g.kp = Eigen::VectorXd::Constant(n_joints, kp);
    g.ki = Eigen::VectorXd::Constant(n_joints, ki);
    g.kd = Eigen::VectorXd::Constant(n_joints, kd);
    g.i_clamp = Eigen::VectorXd::Constant(n_joints, i_clamp);
    return g;
  }

  void validate(int n_joints) const {
    if (kp.size() != n_joints || ki.size() != n_joints || kd.size() != n_joints ||
        i_clamp.size() != n_joints) {
      throw ConfigError("pid gains: arrays must have one entry per joint");
    }
    if ((kp.array() < 0).any() || (ki.array() < 0).any() || (kd.array() < 0).any() ||
        (i_clamp.array() < 0).any()) {
      throw ConfigError("pid gains: kp, ki, kd, i_clamp must be >= 0");
    }
  }
};

/// Controller state threaded by the caller between ticks.
struct PidState {
  Eigen::VectorXd integrator;  // rad*s
  Eigen::VectorXd prev_error;  // rad
  bool primed{false};          // prev_error becomes the initial error on first step
  std::int64_t next_seq{0};

  static PidState init(int n_joints) {
    PidState s;
    s.integrator = Eigen::VectorXd::Zero(n_joints);
    s.prev_error = Eigen::VectorXd::Zero(n_joints);
    return s;
  }
};

struct ControlOutput {
  VelocityCommand cmd;
  Eigen::VectorXd pid_error;  // rad, reference minus observed
};

/// One control tick: track the wall-tick reference from a possibly stale
/// observed state. Derivative acts on the error; the first step defines
/// prev_error as the initial error so the derivative starts at zero. The
/// command is feedforward qd_ref plus PID feedback, clamped to vel_limit.
inline ControlOutput controller_step(const JointTrajectory& traj, const PidGains& gains,
                                     Tick now_tick, const JointState& observed,
                                     PidState& state, const Eigen::VectorXd& vel_limit) {
  const TrajectorySample ref = traj.reference_at(now_tick);
  const Eigen::VectorXd error = ref.q_ref - observed.q;

  if (!state.primed) {
    state.prev_error = error;
    state.primed = true;
  }
  state.integrator = (state.integrator + error * traj.dt)
                         .cwiseMax(-gains.i_clamp)
                         .cwiseMin(gains.i_clamp);
  const Eigen::VectorXd derivative = (error - state.prev_error) / traj.dt;
  state.prev_error = error;

  Eigen::VectorXd qd_cmd = ref.qd_ref + gains.kp.cwiseProduct(error) +
                           gains.ki.cwiseProduct(state.integrator) +
                           gains.kd.cwiseProduct(derivative);
  qd_cmd = qd_cmd.cwiseMax(-vel_limit).cwiseMin(vel_limit);

  ControlOutput out;
  out.cmd.qd_cmd = qd_cmd;
  out.cmd.seq = state.next_seq++;
  out.cmd.send_tick = now_tick;
  out.pid_error = error;
  return out;
}

}  // namespace qocsim
