#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "qocsim/csv.hpp"
#include "qocsim/errors.hpp"
#include "qocsim/metrics.hpp"

namespace qocsim {

inline std::vector<std::string> run_csv_header(int n_joints) {
  std::vector<std::string> header{"tick", "time_s"};
  auto block = [&](const std::string& name) {
    for (int j = 0; j < n_joints; ++j) header.push_back(name + "_" + std::to_string(j));
  };
  block("q_plan");
  block("q_exec");
  block("qd_cmd_sent");
  block("qd_cmd_applied");
  block("pid_err");
  header.push_back("ee_x");
  header.push_back("ee_y");
  header.push_back("ee_z");
  return header;
}

inline CsvTable run_to_table(const RunLog& log) {
  CsvTable table(run_csv_header(log.n_joints));
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::vector<double> row;
    row.reserve(2 + 5 * log.n_joints + 3);
    row.push_back(static_cast<double>(log.tick[i]));
    row.push_back(static_cast<double>(log.tick[i]) * log.dt);
    auto append = [&](const Eigen::VectorXd& v) {
      for (int j = 0; j < v.size(); ++j) row.push_back(v[j]);
    };
    append(log.q_plan[i]);
    append(log.q_exec[i]);
    append(log.qd_cmd_sent[i]);
    append(log.qd_cmd_applied[i]);
    append(log.pid_error[i]);
    row.push_back(log.ee_position[i].x());
    row.push_back(log.ee_position[i].y());
    row.push_back(log.ee_position[i].z());
    table.add_row(row);
  }
  return table;
}

inline void write_run_csv(const RunLog& log, const std::string& path) {
  run_to_table(log).write(path);
}

/// Rebuild the per-tick series from an exported run CSV. Divergence flags
/// and channel stats live in the summary, not the CSV; the caller re-runs
/// detect_divergence if it needs them.
inline RunLog read_run_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto& header = table.header();
  if (header.size() < 5 || header[0] != "tick" || header[1] != "time_s") {
    throw ConfigError(path + ": not a run csv");
  }
  const int n = (static_cast<int>(header.size()) - 5) / 5;
  if (static_cast<int>(header.size()) != 5 * n + 5) {
    throw ConfigError(path + ": unexpected column count");
  }

  RunLog log;
  log.n_joints = n;
  for (const auto& row : table.rows()) {
    if (row.size() != header.size()) throw ConfigError(path + ": ragged row");
    log.tick.push_back(static_cast<Tick>(row[0]));
    int c = 2;
    auto take = [&]() {
      Eigen::VectorXd v(n);
      for (int j = 0; j < n; ++j) v[j] = row[c++];
      return v;
    };
    log.q_plan.push_back(take());
    log.q_exec.push_back(take());
    log.qd_cmd_sent.push_back(take());
    log.qd_cmd_applied.push_back(take());
    log.pid_error.push_back(take());
    log.ee_position.push_back(Eigen::Vector3d(row[c], row[c + 1], row[c + 2]));
  }
  if (log.size() >= 2) {
    // time_s of tick 1 is exactly dt as written (one tick * dt).
    const auto& rows = table.rows();
    log.dt = rows[1][1] - rows[0][1];
  }
  return log;
}

/// KPI summary as flat key = value text, parsable by KvFile.
inline std::string summary_to_string(const KpiReport& kpis, const RunLog& log) {
  std::ostringstream out;
  out << "ticks = " << log.size() << '\n';
  out << "dt = " << format_double(log.dt) << '\n';
  out << "seed = " << log.seed << '\n';
  out << "diverged = " << (log.diverged ? 1 : 0) << '\n';
  out << "first_divergence_tick = " << log.first_divergence_tick << '\n';
  out << "cum_pid_error = " << format_double(kpis.pid_error.final_value) << '\n';
  out << "cum_joint_dev = " << format_double(kpis.joint_dev.final_value) << '\n';
  out << "cum_vel_diff = " << format_double(kpis.vel_diff.metric.final_value) << '\n';
  out << "cum_vel_diff_truncated = " << (kpis.vel_diff.truncated ? 1 : 0) << '\n';
  out << "cum_vel_diff_ticks = " << kpis.vel_diff.compared_ticks << '\n';
  out << "cartesian_dev_mean = " << format_double(kpis.cartesian.mean) << '\n';
  out << "cartesian_dev_max = " << format_double(kpis.cartesian.max) << '\n';
  out << "cmd_pushed = " << log.cmd_channel_stats.pushed << '\n';
  out << "cmd_delivered = " << log.cmd_channel_stats.delivered << '\n';
  out << "cmd_lost = " << log.cmd_channel_stats.lost << '\n';
  out << "status_pushed = " << log.status_channel_stats.pushed << '\n';
  out << "status_delivered = " << log.status_channel_stats.delivered << '\n';
  out << "status_lost = " << log.status_channel_stats.lost << '\n';
  return out.str();
}

}  // namespace qocsim
