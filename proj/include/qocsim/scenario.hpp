#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qocsim/arm_model.hpp"
#include "qocsim/channel.hpp"
#include "qocsim/errors.hpp"
#include "qocsim/kv_file.hpp"
#include "qocsim/pid_controller.hpp"
#include "qocsim/trajectory.hpp"

namespace qocsim {

/// What the plant does when the command stream dries up.
enum class HoldPolicy {
  hold_last,   // keep applying the last received command forever
  zero_after,  // zero the command once it is older than a cutoff
};

/// Everything one simulation run needs. Loadable from a flat key = value
/// file (see load_scenario) or built directly in code.
struct ScenarioConfig {
  std::string arm_ref{"planar2"};
  ArmDescription arm;
  Eigen::VectorXd q_start;

  WaypointList waypoints;
  double speed{0.1};  // m/s (cartesian) or rad/s in the max norm (joint)
  double ik_damping{0.05};

  PidGains gains;

  double tick_hz{100.0};
  int plant_substeps{10};
  double duration{10.0};  // s, must cover the planned trajectory

  HoldPolicy hold_policy{HoldPolicy::hold_last};
  double hold_zero_after{0.0};  // s, used by zero_after

  std::uint64_t seed{12345};
  double divergence_threshold{1.0};  // rad

  ChannelConfig cmd_channel;
  ChannelConfig status_channel;

  double dt() const { return 1.0 / tick_hz; }
  Tick n_ticks() const { return std::llround(duration * tick_hz); }

  void validate() const {
    arm.validate();
    const int n = arm.n_joints();
    if (q_start.size() != n) {
      throw ConfigError("scenario: q_start must have one entry per joint");
    }
    waypoints.validate(n);
    gains.validate(n);
    if (!(speed > 0.0)) throw ConfigError("scenario: trajectory.speed must be > 0");
    if (!(tick_hz > 0.0)) throw ConfigError("scenario: tick_hz must be > 0");
    if (plant_substeps < 1) throw ConfigError("scenario: plant_substeps must be >= 1");
    if (!(duration > 0.0)) throw ConfigError("scenario: duration must be > 0");
    if (hold_policy == HoldPolicy::zero_after && !(hold_zero_after >= 0.0)) {
      throw ConfigError("scenario: hold_zero_after must be >= 0");
    }
    if (!(divergence_threshold > 0.0)) {
      throw ConfigError("scenario: divergence_threshold must be > 0");
    }
    cmd_channel.validate();
    status_channel.validate();
  }
};

/// "planar2" or a path to an arm description file, relative paths resolved
/// against base_dir first.
inline ArmDescription resolve_arm(const std::string& ref, const std::string& base_dir) {
  if (ref == "planar2") return make_planar2();
  namespace fs = std::filesystem;
  fs::path p(ref);
  if (p.is_relative() && !base_dir.empty()) {
    const fs::path joined = fs::path(base_dir) / p;
    if (fs::exists(joined)) p = joined;
  }
  ArmDescription arm = load_arm_file(p.string());
  arm.name = ref;
  return arm;
}

namespace detail {

inline std::vector<Eigen::VectorXd> parse_points(const std::string& text,
                                                 const std::string& where) {
  std::vector<Eigen::VectorXd> points;
  std::istringstream stream(text);
  std::string chunk;
  while (std::getline(stream, chunk, ';')) {
    std::vector<double> comps;
    std::istringstream comp_stream(chunk);
    std::string item;
    while (std::getline(comp_stream, item, ',')) {
      const auto begin = item.find_first_not_of(" \t");
      if (begin == std::string::npos) {
        throw ConfigError(where + ": empty component in point '" + chunk + "'");
      }
      const auto end = item.find_last_not_of(" \t");
      const std::string token = item.substr(begin, end - begin + 1);
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != token.size()) {
        throw ConfigError(where + ": bad number '" + token + "' in trajectory.points");
      }
      comps.push_back(v);
    }
    if (comps.empty()) continue;  // tolerate a trailing ';'
    points.push_back(Eigen::Map<Eigen::VectorXd>(comps.data(), comps.size()));
  }
  return points;
}

inline ChannelConfig parse_channel(const KvFile& kv, const std::string& prefix,
                                   const std::string& base_dir) {
  ChannelConfig cfg;
  if (auto kind = kv.get_string(prefix + ".kind")) {
    cfg.kind = channel_kind_from_string(*kind);
  }
  cfg.queue_len = kv.get_int(prefix + ".queue_len", cfg.queue_len);
  cfg.base_delay = kv.get_double(prefix + ".base_delay", cfg.base_delay);
  cfg.jitter_sigma = kv.get_double(prefix + ".jitter_sigma", cfg.jitter_sigma);
  cfg.loss_prob = kv.get_double(prefix + ".loss_prob", cfg.loss_prob);
  cfg.allow_reorder = kv.get_bool(prefix + ".allow_reorder", cfg.allow_reorder);
  cfg.good_rate = kv.get_double(prefix + ".good_rate", cfg.good_rate);
  cfg.bad_rate = kv.get_double(prefix + ".bad_rate", cfg.bad_rate);
  cfg.good_delay = kv.get_double(prefix + ".good_delay", cfg.good_delay);
  cfg.bad_delay = kv.get_double(prefix + ".bad_delay", cfg.bad_delay);
  cfg.period = kv.get_double(prefix + ".period", cfg.period);
  cfg.msg_size = kv.get_double(prefix + ".msg_size", cfg.msg_size);
  if (auto trace = kv.get_string(prefix + ".trace_path")) {
    namespace fs = std::filesystem;
    fs::path p(*trace);
    if (p.is_relative() && !base_dir.empty()) {
      const fs::path joined = fs::path(base_dir) / p;
      if (fs::exists(joined)) p = joined;
    }
    cfg.trace_path = p.string();
  }
  if (kv.has(prefix + ".seed")) {
    cfg.seed = static_cast<std::uint64_t>(kv.require_int(prefix + ".seed"));
  }
  cfg.validate();
  return cfg;
}

}  // namespace detail

/// Scenario file schema (all units s, m, rad, Hz; `#` comments):
///
///   arm = planar2 | <arm file path>
///   q_start.<i> = <rad>                      (default 0)
///   trajectory.space = cartesian | joint
///   trajectory.speed = <m/s or rad/s>
///   trajectory.points = x,y,z; x,y,z; ...    (joint space: one value per joint)
///   gains.kp / gains.ki / gains.kd / gains.i_clamp
///   tick_hz, plant_substeps, duration, seed, divergence_threshold
///   hold_policy = hold-last | zero-after     (+ hold_zero_after = <s>)
///   cmd_channel.* / status_channel.*         (kind, queue_len, base_delay,
///       jitter_sigma, loss_prob, allow_reorder, good_rate, bad_rate,
///       good_delay, bad_delay, period, msg_size, trace_path, seed)
///
/// Unknown keys are errors, reported with their line number.
inline ScenarioConfig load_scenario(const std::string& path) {
  const KvFile kv = KvFile::parse_file(path);
  const std::string base_dir = std::filesystem::path(path).parent_path().string();

  ScenarioConfig cfg;
  cfg.arm_ref = kv.get_string("arm").value_or("planar2");
  cfg.arm = resolve_arm(cfg.arm_ref, base_dir);
  const int n = cfg.arm.n_joints();

  cfg.q_start = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    cfg.q_start[j] = kv.get_double("q_start." + std::to_string(j), 0.0);
  }

  const std::string space = kv.require_string("trajectory.space");
  if (space == "cartesian") {
    cfg.waypoints.space = WaypointSpace::cartesian;
  } else if (space == "joint") {
    cfg.waypoints.space = WaypointSpace::joint;
  } else {
    throw ConfigError(kv.location("trajectory.space") +
                      ": trajectory.space must be cartesian or joint");
  }
  cfg.waypoints.points =
      detail::parse_points(kv.require_string("trajectory.points"), kv.origin());
  cfg.speed = kv.require_double("trajectory.speed");
  cfg.ik_damping = kv.get_double("trajectory.damping", cfg.ik_damping);

  cfg.gains = PidGains::uniform(n);
  cfg.gains.kp.setConstant(kv.get_double("gains.kp", cfg.gains.kp[0]));
  cfg.gains.ki.setConstant(kv.get_double("gains.ki", cfg.gains.ki[0]));
  cfg.gains.kd.setConstant(kv.get_double("gains.kd", cfg.gains.kd[0]));
  cfg.gains.i_clamp.setConstant(kv.get_double("gains.i_clamp", cfg.gains.i_clamp[0]));

  cfg.tick_hz = kv.get_double("tick_hz", cfg.tick_hz);
  cfg.plant_substeps = static_cast<int>(kv.get_int("plant_substeps", cfg.plant_substeps));
  cfg.duration = kv.get_double("duration", cfg.duration);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.divergence_threshold =
      kv.get_double("divergence_threshold", cfg.divergence_threshold);

  const std::string hold = kv.get_string("hold_policy").value_or("hold-last");
  if (hold == "hold-last") {
    cfg.hold_policy = HoldPolicy::hold_last;
  } else if (hold == "zero-after") {
    cfg.hold_policy = HoldPolicy::zero_after;
    cfg.hold_zero_after = kv.require_double("hold_zero_after");
  } else {
    throw ConfigError(kv.location("hold_policy") +
                      ": hold_policy must be hold-last or zero-after");
  }

  cfg.cmd_channel = detail::parse_channel(kv, "cmd_channel", base_dir);
  cfg.status_channel = detail::parse_channel(kv, "status_channel", base_dir);

  kv.reject_unknown_keys();
  cfg.validate();
  return cfg;
}

}  // namespace qocsim
