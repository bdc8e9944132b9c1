#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qocsim/arm_model.hpp"
#include "qocsim/channel.hpp"
#include "qocsim/errors.hpp"
#include "qocsim/types.hpp"

namespace qocsim {

/// Per-tick record of one simulation run. All series share the tick index;
/// q_exec is the plant state at the start of the tick, the one the
/// controller's command for that tick acts on.
struct RunLog {
  double dt{0.0};
  int n_joints{0};
  std::vector<Tick> tick;
  std::vector<Eigen::VectorXd> q_plan;
  std::vector<Eigen::VectorXd> q_exec;
  std::vector<Eigen::VectorXd> qd_cmd_sent;
  std::vector<Eigen::VectorXd> qd_cmd_applied;
  std::vector<Eigen::VectorXd> pid_error;
  std::vector<Eigen::Vector3d> ee_position;

  bool diverged{false};
  Tick first_divergence_tick{-1};

  std::uint64_t seed{0};
  ChannelStats cmd_channel_stats;
  ChannelStats status_channel_stats;

  std::size_t size() const { return tick.size(); }

  bool operator==(const RunLog& other) const {
    auto vec_eq = [](const auto& a, const auto& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
      }
      return true;
    };
    return dt == other.dt && n_joints == other.n_joints && tick == other.tick &&
           vec_eq(q_plan, other.q_plan) && vec_eq(q_exec, other.q_exec) &&
           vec_eq(qd_cmd_sent, other.qd_cmd_sent) &&
           vec_eq(qd_cmd_applied, other.qd_cmd_applied) &&
           vec_eq(pid_error, other.pid_error) &&
           vec_eq(ee_position, other.ee_position) && diverged == other.diverged &&
           first_divergence_tick == other.first_divergence_tick;
  }
};

struct MetricSeries {
  std::vector<double> series;  // cumulative, one entry per tick
  double final_value{0.0};
};

/// Cumulated PID error: sum over ticks and joints of |pid_error| * dt.
inline MetricSeries cum_pid_error(const RunLog& log) {
  MetricSeries out;
  out.series.reserve(log.size());
  double acc = 0.0;
  for (const auto& e : log.pid_error) {
    acc += e.cwiseAbs().sum() * log.dt;
    out.series.push_back(acc);
  }
  out.final_value = acc;
  return out;
}

/// Cumulated joint-space deviation between executed and planned positions.
inline MetricSeries cum_joint_dev(const RunLog& log) {
  MetricSeries out;
  out.series.reserve(log.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    acc += (log.q_exec[i] - log.q_plan[i]).cwiseAbs().sum() * log.dt;
    out.series.push_back(acc);
  }
  out.final_value = acc;
  return out;
}

struct VelDiffResult {
  MetricSeries metric;
  bool truncated{false};        // the two logs had different lengths
  std::size_t compared_ticks{0};
};

/// Cumulated difference of the sent velocity commands against a reference
/// run. Lengths may differ (a diverged run truncates); the comparison
/// covers the common prefix and says so.
inline VelDiffResult cum_vel_diff(const RunLog& log, const RunLog& reference) {
  if (log.n_joints != reference.n_joints) {
    throw ConfigError("cum_vel_diff: joint count differs from reference");
  }
  if (log.dt != reference.dt) {
    throw ConfigError("cum_vel_diff: tick length differs from reference");
  }
  VelDiffResult out;
  out.compared_ticks = std::min(log.size(), reference.size());
  out.truncated = log.size() != reference.size();
  out.metric.series.reserve(out.compared_ticks);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.compared_ticks; ++i) {
    acc += (log.qd_cmd_sent[i] - reference.qd_cmd_sent[i]).cwiseAbs().sum() * log.dt;
    out.metric.series.push_back(acc);
  }
  out.metric.final_value = acc;
  return out;
}

struct CartesianDev {
  double mean{0.0};  // m
  double max{0.0};   // m
};

/// Pointwise Euclidean distance between the executed end-effector path and
/// the forward kinematics of the plan, per tick.
inline CartesianDev cartesian_dev(const RunLog& log, const ArmDescription& arm) {
  CartesianDev out;
  if (log.size() == 0) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Eigen::Vector3d plan_pos = forward_kinematics(arm, log.q_plan[i]).position;
    const double dist = (log.ee_position[i] - plan_pos).norm();
    sum += dist;
    out.max = std::max(out.max, dist);
  }
  out.mean = sum / static_cast<double>(log.size());
  return out;
}

struct DivergenceResult {
  bool diverged{false};
  Tick first_tick{-1};
};

/// A run diverged when any joint leaves the plan by more than `threshold`
/// radians or any logged value stops being finite.
inline DivergenceResult detect_divergence(const RunLog& log, double threshold = 1.0) {
  for (std::size_t i = 0; i < log.size(); ++i) {
    const bool finite = all_finite(log.q_exec[i]) && all_finite(log.qd_cmd_sent[i]) &&
                        all_finite(log.qd_cmd_applied[i]) &&
                        all_finite(log.pid_error[i]) && log.ee_position[i].allFinite();
    const double worst = (log.q_exec[i] - log.q_plan[i]).cwiseAbs().maxCoeff();
    if (!finite || worst > threshold) {
      return DivergenceResult{true, log.tick[i]};
    }
  }
  return DivergenceResult{false, -1};
}

/// All QoC KPIs of one run, compared against a reference run.
struct KpiReport {
  MetricSeries pid_error;
  MetricSeries joint_dev;
  VelDiffResult vel_diff;
  CartesianDev cartesian;
  DivergenceResult divergence;
};

inline KpiReport compute_kpis(const RunLog& log, const RunLog& reference,
                              const ArmDescription& arm, double divergence_threshold = 1.0) {
  KpiReport report;
  report.pid_error = cum_pid_error(log);
  report.joint_dev = cum_joint_dev(log);
  report.vel_diff = cum_vel_diff(log, reference);
  report.cartesian = cartesian_dev(log, arm);
  report.divergence = detect_divergence(log, divergence_threshold);
  return report;
}

}  // namespace qocsim
