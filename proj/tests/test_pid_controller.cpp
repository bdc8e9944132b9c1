#include "qocsim/pid_controller.hpp"

#include <gtest/gtest.h>

#include "qocsim/runner.hpp"
#include "test_support.hpp"

using namespace qocsim;

namespace {

// Two-sample, one-joint trajectory with a chosen reference and feedforward.
JointTrajectory tiny_traj(double q0, double q1, double dt = 0.01) {
  JointTrajectory traj;
  traj.dt = dt;
  traj.q_ref = {Eigen::VectorXd::Constant(1, q0), Eigen::VectorXd::Constant(1, q1)};
  traj.qd_ref = {Eigen::VectorXd::Constant(1, (q1 - q0) / dt),
                 Eigen::VectorXd::Zero(1)};
  return traj;
}

JointState observed_at(double q) {
  return JointState{Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Zero(1), 0};
}

const Eigen::VectorXd kWideLimit = Eigen::VectorXd::Constant(1, 100.0);

}  // namespace

TEST(ControllerStep, ZeroErrorIsPureFeedforward) {
  const JointTrajectory traj = tiny_traj(0.2, 0.25);
  PidGains gains = PidGains::uniform(1);
  PidState state = PidState::init(1);
  const ControlOutput out =
      controller_step(traj, gains, 0, observed_at(0.2), state, kWideLimit);
  EXPECT_DOUBLE_EQ(out.cmd.qd_cmd[0], traj.qd_ref[0][0]);
  EXPECT_DOUBLE_EQ(out.pid_error[0], 0.0);
}

TEST(ControllerStep, ProportionalLaw) {
  const JointTrajectory traj = tiny_traj(0.5, 0.5);
  PidGains gains = PidGains::uniform(1, /*kp=*/1.0, /*ki=*/0.0, /*kd=*/0.0);
  PidState state = PidState::init(1);
  const ControlOutput out =
      controller_step(traj, gains, 0, observed_at(0.0), state, kWideLimit);
  EXPECT_DOUBLE_EQ(out.cmd.qd_cmd[0], 0.5);
}

TEST(ControllerStep, TerminalHoldGivesZeroCommandAtZeroError) {
  const JointTrajectory traj = tiny_traj(0.0, 1.0);
  PidGains gains = PidGains::uniform(1);
  PidState state = PidState::init(1);
  const ControlOutput out =
      controller_step(traj, gains, 500, observed_at(1.0), state, kWideLimit);
  EXPECT_DOUBLE_EQ(out.cmd.qd_cmd[0], 0.0);
}

TEST(ControllerStep, SequenceNumbersIncreaseByOne) {
  const JointTrajectory traj = tiny_traj(0.0, 1.0);
  PidGains gains = PidGains::uniform(1);
  PidState state = PidState::init(1);
  std::int64_t prev = -1;
  for (Tick t = 0; t < 50; ++t) {
    const ControlOutput out =
        controller_step(traj, gains, t, observed_at(0.1), state, kWideLimit);
    EXPECT_EQ(out.cmd.seq, prev + 1);
    prev = out.cmd.seq;
  }
}

TEST(ControllerStep, IntegratorNeverExceedsClamp) {
  const JointTrajectory traj = tiny_traj(1.0, 1.0);
  PidGains gains = PidGains::uniform(1, 0.0, 1.0, 0.0, /*i_clamp=*/0.05);
  PidState state = PidState::init(1);
  for (Tick t = 0; t < 1000; ++t) {
    controller_step(traj, gains, t, observed_at(0.0), state, kWideLimit);
    ASSERT_LE(std::abs(state.integrator[0]), 0.05);
  }
}

TEST(ControllerStep, FirstStepDerivativeIsZero) {
  const JointTrajectory traj = tiny_traj(1.0, 1.0);
  PidGains gains = PidGains::uniform(1, 0.0, 0.0, /*kd=*/1.0, 0.0);
  PidState state = PidState::init(1);
  const ControlOutput out =
      controller_step(traj, gains, 0, observed_at(0.0), state, kWideLimit);
  // kd on a first-step error of 1.0 would explode if prev_error started at 0.
  EXPECT_DOUBLE_EQ(out.cmd.qd_cmd[0], 0.0);
}

TEST(ControllerStep, CommandClampedToVelocityLimit) {
  const JointTrajectory traj = tiny_traj(10.0, 10.0);
  PidGains gains = PidGains::uniform(1, 100.0, 0.0, 0.0);
  PidState state = PidState::init(1);
  const Eigen::VectorXd limit = Eigen::VectorXd::Constant(1, 2.0);
  const ControlOutput out = controller_step(traj, gains, 0, observed_at(0.0), state, limit);
  EXPECT_DOUBLE_EQ(out.cmd.qd_cmd[0], 2.0);
}

TEST(ControllerStep, DeterministicBitIdenticalOutputs) {
  const JointTrajectory traj = tiny_traj(0.3, 0.7);
  PidGains gains = PidGains::uniform(1);
  PidState a = PidState::init(1);
  PidState b = PidState::init(1);
  for (Tick t = 0; t < 20; ++t) {
    const ControlOutput oa = controller_step(traj, gains, t, observed_at(0.11), a, kWideLimit);
    const ControlOutput ob = controller_step(traj, gains, t, observed_at(0.11), b, kWideLimit);
    ASSERT_EQ(oa.cmd.qd_cmd[0], ob.cmd.qd_cmd[0]);
    ASSERT_EQ(oa.cmd.seq, ob.cmd.seq);
  }
}

TEST(ControllerStep, ObservedStateIsNotMutated) {
  const JointTrajectory traj = tiny_traj(0.3, 0.7);
  PidGains gains = PidGains::uniform(1);
  PidState state = PidState::init(1);
  const JointState observed = observed_at(0.05);
  const Eigen::VectorXd snapshot = observed.q;
  controller_step(traj, gains, 0, observed, state, kWideLimit);
  EXPECT_EQ(observed.q, snapshot);
}

TEST(ClosedLoop, ConvergesOnSixJointArmWithIdealChannels) {
  const ScenarioConfig cfg = testsupport::default_scenario();
  const JointTrajectory traj = plan_scenario(cfg);
  const RunLog log = run_with_trajectory(cfg, traj);
  ASSERT_FALSE(log.diverged);
  const Eigen::VectorXd final_err =
      (log.q_exec.back() - traj.reference_at(1 << 30).q_ref).cwiseAbs();
  EXPECT_LT(final_err.maxCoeff(), 1e-2);
}
