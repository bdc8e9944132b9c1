// qocsim: run robot-arm control scenarios over impaired network channels,
// sweep latencies, and export plot-ready CSV tables.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qocsim/csv.hpp"
#include "qocsim/metrics.hpp"
#include "qocsim/run_io.hpp"
#include "qocsim/runner.hpp"
#include "qocsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitDiverged = 2;

namespace fs = std::filesystem;

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("QOC_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    return static_cast<std::uint64_t>(std::stoull(env));
  } catch (const std::exception&) {
    throw qocsim::ConfigError(std::string("QOC_SEED is not an integer: ") + env);
  }
}

std::string latency_label(double latency_s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%gms", latency_s * 1000.0);
  return buf;
}

std::vector<double> parse_latencies(const std::string& text) {
  std::vector<double> out;
  std::istringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != item.size()) {
      throw qocsim::ConfigError("--latencies: bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

qocsim::ScenarioConfig load_with_seed(const std::string& scenario_path,
                                      std::optional<std::uint64_t> seed_flag) {
  qocsim::ScenarioConfig cfg = qocsim::load_scenario(scenario_path);
  if (seed_flag) {
    cfg.seed = *seed_flag;
  } else if (auto env_seed = seed_from_env()) {
    cfg.seed = *env_seed;
  }
  return cfg;
}

void write_run_plots(const qocsim::ScenarioConfig& cfg, const qocsim::RunLog& log,
                     const qocsim::KpiReport& kpis, const fs::path& out_dir) {
  // Executed vs planned end-effector path.
  qocsim::CsvTable traj({"time_s", "plan_x", "plan_y", "plan_z", "ee_x", "ee_y", "ee_z"});
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Eigen::Vector3d plan_pos =
        qocsim::forward_kinematics(cfg.arm, log.q_plan[i]).position;
    traj.add_row({static_cast<double>(log.tick[i]) * log.dt, plan_pos.x(), plan_pos.y(),
                  plan_pos.z(), log.ee_position[i].x(), log.ee_position[i].y(),
                  log.ee_position[i].z()});
  }
  traj.write((out_dir / "trajectory_xyz.csv").string());

  // Velocity commands over time.
  std::vector<std::string> vel_header{"time_s"};
  for (int j = 0; j < log.n_joints; ++j) {
    vel_header.push_back("qd_cmd_sent_" + std::to_string(j));
  }
  qocsim::CsvTable vel(vel_header);
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::vector<double> row{static_cast<double>(log.tick[i]) * log.dt};
    for (int j = 0; j < log.n_joints; ++j) row.push_back(log.qd_cmd_sent[i][j]);
    vel.add_row(row);
  }
  vel.write((out_dir / "velocity_cmds.csv").string());

  // Cumulative error curves.
  qocsim::CsvTable cum({"time_s", "cum_pid_error", "cum_joint_dev"});
  for (std::size_t i = 0; i < log.size(); ++i) {
    cum.add_row({static_cast<double>(log.tick[i]) * log.dt, kpis.pid_error.series[i],
                 kpis.joint_dev.series[i]});
  }
  cum.write((out_dir / "cum_error.csv").string());
}

int cmd_run(const std::string& scenario_path, const std::string& out,
            std::optional<std::uint64_t> seed_flag) {
  const qocsim::ScenarioConfig cfg = load_with_seed(scenario_path, seed_flag);
  const qocsim::RunLog log = qocsim::run_scenario(cfg);
  const qocsim::KpiReport kpis =
      qocsim::compute_kpis(log, log, cfg.arm, cfg.divergence_threshold);

  const fs::path out_dir(out);
  qocsim::write_run_csv(log, (out_dir / "run.csv").string());
  qocsim::write_file_atomic((out_dir / "summary.txt").string(),
                            qocsim::summary_to_string(kpis, log));
  write_run_plots(cfg, log, kpis, out_dir);

  if (log.diverged) {
    std::cerr << "run diverged at tick " << log.first_divergence_tick << "\n";
    return kExitDiverged;
  }
  std::cout << "run ok: " << log.size() << " ticks, outputs in " << out_dir.string()
            << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& latencies_text,
              const std::string& out, std::optional<std::uint64_t> seed_flag) {
  qocsim::SweepSpec spec;
  spec.base = load_with_seed(scenario_path, seed_flag);
  spec.latencies = parse_latencies(latencies_text);
  spec.validate();

  const qocsim::SweepResult result = qocsim::run_sweep(spec);
  const fs::path out_dir(out);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t ref_len = result.reference.size();

  std::ostringstream summary;
  bool any_diverged = false;

  for (const auto& point : result.points) {
    const std::string label = latency_label(point.latency_s);
    if (!point.ok) {
      summary << label << ".error = " << point.error << '\n';
      continue;
    }
    qocsim::write_run_csv(point.log, (out_dir / ("run_" + label + ".csv")).string());
    summary << label << ".diverged = " << (point.log.diverged ? 1 : 0) << '\n';
    summary << label << ".cum_pid_error = "
            << qocsim::format_double(point.kpis.pid_error.final_value) << '\n';
    summary << label << ".cum_joint_dev = "
            << qocsim::format_double(point.kpis.joint_dev.final_value) << '\n';
    summary << label << ".cum_vel_diff = "
            << qocsim::format_double(point.kpis.vel_diff.metric.final_value) << '\n';
    summary << label << ".cartesian_dev_max = "
            << qocsim::format_double(point.kpis.cartesian.max) << '\n';
    any_diverged = any_diverged || point.log.diverged;
  }
  qocsim::write_file_atomic((out_dir / "summary.txt").string(), summary.str());

  // Combined cumulative velocity-difference table, one column per latency.
  std::vector<std::string> cum_header{"time_s"};
  for (const auto& point : result.points) {
    cum_header.push_back("lat_" + latency_label(point.latency_s));
  }
  qocsim::CsvTable cum(cum_header);
  for (std::size_t i = 0; i < ref_len; ++i) {
    std::vector<double> row{static_cast<double>(result.reference.tick[i]) *
                            result.reference.dt};
    for (const auto& point : result.points) {
      const auto& series = point.kpis.vel_diff.metric.series;
      row.push_back(point.ok && i < series.size() ? series[i] : nan);
    }
    cum.add_row(row);
  }
  cum.write((out_dir / "cum_vel_diff.csv").string());

  // Combined end-effector trajectories against the planned path.
  std::vector<std::string> traj_header{"time_s", "plan_x", "plan_y", "plan_z"};
  for (const auto& point : result.points) {
    const std::string label = latency_label(point.latency_s);
    traj_header.push_back("ee_x_" + label);
    traj_header.push_back("ee_y_" + label);
    traj_header.push_back("ee_z_" + label);
  }
  qocsim::CsvTable traj(traj_header);
  for (std::size_t i = 0; i < ref_len; ++i) {
    const Eigen::Vector3d plan_pos =
        qocsim::forward_kinematics(spec.base.arm, result.reference.q_plan[i]).position;
    std::vector<double> row{static_cast<double>(result.reference.tick[i]) *
                                result.reference.dt,
                            plan_pos.x(), plan_pos.y(), plan_pos.z()};
    for (const auto& point : result.points) {
      if (point.ok && i < point.log.size()) {
        row.push_back(point.log.ee_position[i].x());
        row.push_back(point.log.ee_position[i].y());
        row.push_back(point.log.ee_position[i].z());
      } else {
        row.insert(row.end(), {nan, nan, nan});
      }
    }
    traj.add_row(row);
  }
  traj.write((out_dir / "trajectories.csv").string());

  if (any_diverged) {
    std::cerr << "sweep: at least one point diverged (see summary.txt)\n";
    return kExitDiverged;
  }
  std::cout << "sweep ok: " << result.points.size() << " points, outputs in "
            << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
  const qocsim::ScenarioConfig cfg = qocsim::load_scenario(scenario_path);
  const qocsim::JointTrajectory traj = qocsim::plan_scenario(cfg);
  std::cout << "plan ok: " << traj.size() << " samples, duration "
            << qocsim::format_double(traj.total_duration()) << " s, arm '"
            << cfg.arm_ref << "' (" << cfg.arm.n_joints() << " joints)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Networked robot-arm velocity-control simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::string latencies = "0,0.002,0.005,0.007,0.01";
  std::optional<std::uint64_t> seed_flag;

  CLI::App* run = app.add_subcommand("run", "execute one scenario and export per-tick CSV");
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_flag, "override the scenario seed");

  CLI::App* sweep =
      app.add_subcommand("sweep", "rerun the scenario across one-way latencies");
  sweep->add_option("--scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--latencies", latencies,
                    "comma-separated one-way latencies in seconds, ascending");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seed", seed_flag, "override the scenario seed");

  CLI::App* validate =
      app.add_subcommand("validate", "parse a scenario and plan without simulating");
  validate->add_option("--scenario", scenario_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, seed_flag);
    if (sweep->parsed()) return cmd_sweep(scenario_path, latencies, out_dir, seed_flag);
    if (validate->parsed()) return cmd_validate(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
