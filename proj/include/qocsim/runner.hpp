#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qocsim/arm_model.hpp"
#include "qocsim/channel.hpp"
#include "qocsim/errors.hpp"
#include "qocsim/metrics.hpp"
#include "qocsim/pid_controller.hpp"
#include "qocsim/scenario.hpp"
#include "qocsim/trajectory.hpp"
#include "qocsim/types.hpp"

namespace qocsim {

namespace detail {

/// Like freshest() but keeps the envelope, so the caller can advance its
/// accepted-seq watermark.
template <class Payload>
const StampedMessage<Payload>* freshest_message(
    const std::vector<StampedMessage<Payload>>& delivered, std::int64_t last_accepted_seq) {
  const StampedMessage<Payload>* best = nullptr;
  for (const auto& msg : delivered) {
    if (msg.seq > last_accepted_seq && (!best || msg.seq > best->seq)) best = &msg;
  }
  return best;
}

}  // namespace detail

inline JointTrajectory plan_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.waypoints.space == WaypointSpace::cartesian) {
    return plan_cartesian(cfg.arm, cfg.q_start, cfg.waypoints, cfg.speed, cfg.dt(),
                          cfg.ik_damping);
  }
  return plan_joint(cfg.arm, cfg.q_start, cfg.waypoints, cfg.speed, cfg.dt());
}

/// Simulate one scenario against an already-planned trajectory.
///
/// Tick order is fixed: deliver statuses, control, deliver commands,
/// step the plant, emit the new status. With zero-delay channels the
/// command computed at tick t is applied at tick t, and the status emitted
/// at the end of tick t is observed at tick t+1 (it is the state the
/// plant actually has at that point). A run ends after duration * tick_hz
/// ticks, or earlier when the logged state diverges from the plan.
inline RunLog run_with_trajectory(const ScenarioConfig& cfg, const JointTrajectory& traj) {
  cfg.validate();
  if (traj.size() == 0) throw ConfigError("run: empty trajectory");
  const double dt = cfg.dt();
  if (std::abs(traj.dt - dt) > 1e-12) {
    throw ConfigError("run: trajectory dt does not match the scenario tick rate");
  }
  const Tick n_ticks = cfg.n_ticks();
  const Tick plan_ticks = static_cast<Tick>(traj.size()) - 1;
  if (n_ticks < plan_ticks) {
    throw ConfigError("run: duration " + std::to_string(cfg.duration) +
                      " s does not cover the planned trajectory (" +
                      std::to_string(traj.total_duration()) + " s)");
  }

  Channel<VelocityCommand> cmd_channel(cfg.cmd_channel, dt, cfg.seed);
  Channel<JointState> status_channel(cfg.status_channel, dt, cfg.seed ^ 1ULL);

  const int n = cfg.arm.n_joints();
  JointState state{cfg.q_start, Eigen::VectorXd::Zero(n), 0};
  JointState observed = state;  // true state at tick 0
  PidState pid_state = PidState::init(n);
  VelocityCommand held{Eigen::VectorXd::Zero(n), -1, 0};

  std::int64_t last_status_seq = -1;
  std::int64_t last_cmd_seq = -1;
  Tick last_cmd_tick = 0;
  const Tick zero_after_ticks = std::llround(cfg.hold_zero_after * cfg.tick_hz);

  RunLog log;
  log.dt = dt;
  log.n_joints = n;
  log.seed = cfg.seed;

  for (Tick t = 0; t < n_ticks; ++t) {
    // 1. Status direction: newest delivered state becomes the observation.
    const auto statuses = status_channel.deliver(t);
    if (const auto* msg = detail::freshest_message(statuses, last_status_seq)) {
      observed = msg->payload;
      last_status_seq = msg->seq;
    }

    // 2. Control from the (possibly stale) observation.
    const ControlOutput control =
        controller_step(traj, cfg.gains, t, observed, pid_state, cfg.arm.vel_limit);
    cmd_channel.push(control.cmd, control.cmd.seq, t);

    // 3. Command direction: zero-order hold over the freshest delivery.
    const auto commands = cmd_channel.deliver(t);
    if (const auto* msg = detail::freshest_message(commands, last_cmd_seq)) {
      held = msg->payload;
      last_cmd_seq = msg->seq;
      last_cmd_tick = t;
    } else if (cfg.hold_policy == HoldPolicy::zero_after &&
               t - last_cmd_tick > zero_after_ticks) {
      held.qd_cmd.setZero();
    }

    // 4. Log the tick: the plant state the command acts on.
    const TrajectorySample ref = traj.reference_at(t);
    log.tick.push_back(t);
    log.q_plan.push_back(ref.q_ref);
    log.q_exec.push_back(state.q);
    log.qd_cmd_sent.push_back(control.cmd.qd_cmd);
    log.qd_cmd_applied.push_back(held.qd_cmd);
    log.pid_error.push_back(control.pid_error);
    log.ee_position.push_back(forward_kinematics(cfg.arm, state.q).position);

    const bool finite = all_finite(state.q) && all_finite(control.cmd.qd_cmd) &&
                        all_finite(held.qd_cmd);
    if (!finite ||
        (state.q - ref.q_ref).cwiseAbs().maxCoeff() > cfg.divergence_threshold) {
      log.diverged = true;
      log.first_divergence_tick = t;
      break;
    }

    // 5. Plant steps under the held command, then reports back.
    state = plant_step(cfg.arm, state, held, dt, cfg.plant_substeps);
    status_channel.push(JointState{state.q, state.qd, state.tick}, t, t);
  }

  log.cmd_channel_stats = cmd_channel.stats();
  log.status_channel_stats = status_channel.stats();
  return log;
}

inline RunLog run_scenario(const ScenarioConfig& cfg) {
  return run_with_trajectory(cfg, plan_scenario(cfg));
}

/// Latency sweep: the base scenario rerun with a shift-queue channel of
/// round(latency * tick_hz) slots on both directions per point.
struct SweepSpec {
  ScenarioConfig base;
  std::vector<double> latencies;  // one-way, s, sorted ascending

  void validate() const {
    base.validate();
    if (latencies.empty()) throw ConfigError("sweep: latency list is empty");
    for (std::size_t i = 0; i < latencies.size(); ++i) {
      if (latencies[i] < 0.0) throw ConfigError("sweep: latencies must be >= 0");
      if (i > 0 && latencies[i] <= latencies[i - 1]) {
        throw ConfigError("sweep: latencies must be sorted strictly ascending");
      }
    }
  }
};

struct SweepPoint {
  double latency_s{0.0};
  bool ok{false};
  std::string error;
  RunLog log;
  KpiReport kpis;  // against the zero-latency reference
};

struct SweepResult {
  RunLog reference;
  std::vector<SweepPoint> points;
};

inline ScenarioConfig sweep_point_config(const ScenarioConfig& base, double latency_s) {
  ScenarioConfig cfg = base;
  ChannelConfig queue;
  queue.kind = ChannelKind::queue;
  queue.queue_len = std::llround(latency_s * base.tick_hz);
  cfg.cmd_channel = queue;
  cfg.status_channel = queue;
  return cfg;
}

/// Run every sweep point against one shared plan. The zero-latency run is
/// the reference for every KpiReport; a failure at one point is recorded
/// there and does not abort the others.
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const JointTrajectory traj = plan_scenario(spec.base);

  SweepResult result;
  result.reference = run_with_trajectory(sweep_point_config(spec.base, 0.0), traj);

  for (const double latency : spec.latencies) {
    SweepPoint point;
    point.latency_s = latency;
    try {
      point.log = latency == 0.0
                      ? result.reference
                      : run_with_trajectory(sweep_point_config(spec.base, latency), traj);
      point.kpis = compute_kpis(point.log, result.reference, spec.base.arm,
                                spec.base.divergence_threshold);
      point.ok = true;
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
    }
    result.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace qocsim
