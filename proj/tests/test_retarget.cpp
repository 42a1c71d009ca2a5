#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "xmr/dhb.hpp"
#include "xmr/retarget.hpp"

namespace xmr {
namespace {

RobotModel three_link() { return test::planar_arm({0.4, 0.3, 0.2}, test::limits(-2.8, 2.8, 1.5, 15)); }

PipelineConfig circle_config() {
  PipelineConfig cfg;
  cfg.q0 = Eigen::Vector3d(-0.2, 1.2, -1.0);
  return cfg;
}

GripperTrajectory circle() { return test::circle_commands({0.45, 0.15}, 0.1, 0.1, 10.0, 300); }

std::vector<double> position_errors(const RetargetReport& r) {
  std::vector<double> out;
  for (const auto& e : r.tracking) out.push_back(e.position);
  return out;
}

TEST(Retarget, StationaryCommandAtSolutionStaysPut) {
  const RobotModel m = three_link();
  PipelineConfig cfg;
  cfg.q0 = Eigen::Vector3d(0.3, -0.7, 0.4);
  const auto report = run_pipeline(m, cfg, test::stationary_commands(forward_kinematics(m, cfg.q0), 20));
  EXPECT_LT(report.summary.max_position_error, 1e-6);
  EXPECT_LT(report.summary.max_orientation_error, 1e-6);
  for (const auto& t : report.ticks) EXPECT_EQ(t.c1, 1.0);
  EXPECT_EQ(report.summary.saturated_fraction, 0.0);
}

TEST(Retarget, EachSetpointConsumesTheSameNumberOfTicks) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  cfg.policy_rate = 10.0;
  cfg.ik_rate = 50.0;
  const auto cmds = test::circle_commands({0.45, 0.15}, 0.1, 0.1, 10.0, 37);
  const auto report = run_pipeline(m, cfg, cmds);
  EXPECT_EQ(ticks_per_setpoint(cfg), 5);
  EXPECT_EQ(report.ticks.size(), 37u * 5u);
  EXPECT_EQ(report.tracking.size(), 37u);
  EXPECT_NEAR(report.ticks.back().t - cmds[0].t, 37 / 10.0, 1e-12);
  cfg.ik_rate = 55.0;
  EXPECT_THROW(run_pipeline(m, cfg, cmds), std::invalid_argument);
}

TEST(Retarget, CircleErrorMatchesDiscreteClosedLoop) {
  const RobotModel m = three_link();
  const PipelineConfig cfg = circle_config();
  const auto cmds = circle();
  const auto report = run_pipeline(m, cfg, cmds);
  const auto oracle = test::proportional_tracking_oracle(cmds, forward_kinematics(m, cfg.q0).translation(), 10.0,
                                                         ticks_per_setpoint(cfg), 1.0 / cfg.ik_rate);
  const double simulated = test::mean_from(position_errors(report), 100);
  const double predicted = test::mean_from(oracle, 100);
  // The arm is nonlinear, so the Cartesian loop is only matched to first order.
  EXPECT_NEAR(simulated, predicted, 0.05 * predicted);
  EXPECT_EQ(report.summary.limit_violations, 0u);
}

TEST(Retarget, DelayIncreasesTrackingError) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  const auto base = run_pipeline(m, cfg, circle());
  cfg.latency.delay = 5;
  const auto delayed = run_pipeline(m, cfg, circle());
  EXPECT_GT(delayed.summary.mean_position_error, base.summary.mean_position_error);
  EXPECT_GT(test::mean_from(position_errors(delayed), 100), test::mean_from(position_errors(base), 100));
}

TEST(Retarget, LagIncreasesTrackingError) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  const auto base = run_pipeline(m, cfg, circle());
  cfg.latency.tau = Eigen::VectorXd::Constant(1, 0.05);
  const auto lagged = run_pipeline(m, cfg, circle());
  EXPECT_GT(test::mean_from(position_errors(lagged), 100), test::mean_from(position_errors(base), 100));
}

TEST(Retarget, LargerGainTracksBetterUpToStabilityBound) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  double previous = std::numeric_limits<double>::infinity();
  for (const double k : {2.0, 5.0, 10.0, 20.0, 40.0}) {
    cfg.k_grip = Vector6d::Constant(k);
    const double err = test::mean_from(position_errors(run_pipeline(m, cfg, circle())), 100);
    EXPECT_LT(err, previous) << k;
    previous = err;
  }
}

TEST(Retarget, NoLimitViolationsUnderLatencyAndTightLimits) {
  // Joint 2 can only reach 1.0 rad, so the circle drives it onto its limit.
  std::vector<DofLimits> lim{test::limits(-2.8, 2.8, 0.8, 8), test::limits(-1.0, 1.0, 0.8, 8),
                             test::limits(-2.8, 2.8, 0.8, 8)};
  std::vector<JointSpec> joints;
  std::string parent = "base";
  double prev = 0.0;
  const std::vector<double> lengths{0.4, 0.3, 0.2};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string child = "link" + std::to_string(i + 1);
    joints.push_back(test::revolute("j" + std::to_string(i + 1), parent, child,
                                    Posed::Translation(Eigen::Vector3d(prev, 0, 0)), Eigen::Vector3d::UnitZ(), lim[i]));
    parent = child;
    prev = lengths[i];
  }
  const RobotModel m(joints, GripperFrame{parent, Posed::Translation(Eigen::Vector3d(prev, 0, 0))}, "tight");
  const auto cmds = test::circle_commands({0.3, 0.3}, 0.25, 0.3, 10.0, 100);
  for (const int delay : {0, 5, 10}) {
    for (const double tau : {0.0, 0.05, 0.1}) {
      PipelineConfig cfg;
      cfg.q0 = Eigen::Vector3d(0.5, 0.9, -0.5);
      cfg.latency.delay = delay;
      cfg.latency.tau = Eigen::VectorXd::Constant(1, tau);
      const auto report = run_pipeline(m, cfg, cmds);
      EXPECT_EQ(report.summary.limit_violations, 0u);
      EXPECT_GT(report.summary.saturated_fraction, 0.0);
      double reached = -1.0;
      for (const auto& t : report.ticks) {
        ASSERT_TRUE(within_limits(m, t.q));
        reached = std::max(reached, t.q[1]);
      }
      EXPECT_GT(reached, 1.0 - 1e-3);
    }
  }
}

TEST(Retarget, FloatingAndPlanarBasesRun) {
  std::mt19937_64 rng(40);
  for (const RobotModel& m : {test::planar_base_arm(), test::floating_base_arm()}) {
    PipelineConfig cfg;
    cfg.q0 = test::random_configuration(m, rng);
    const Posed start = forward_kinematics(m, cfg.q0);
    std::vector<GripperSample> s;
    for (int k = 0; k < 30; ++k) {
      s.push_back({0.1 * k, start * Posed::FromRotationVector(Eigen::Vector3d(0, 0, 0.01 * k),
                                                              Eigen::Vector3d(0.005 * k, 0.0, 0.0)),
                   false});
    }
    const auto report = run_pipeline(m, cfg, GripperTrajectory(s));
    EXPECT_EQ(report.summary.limit_violations, 0u) << m.name();
    EXPECT_LT(report.summary.max_position_error, 0.01) << m.name();
  }
}

TEST(Retarget, InfeasibleTickIsReported) {
  const RobotModel m = three_link();
  PipelineConfig cfg;
  cfg.q0 = Eigen::Vector3d(0.3, -0.7, 0.4);
  // The gripper starts far behind a wall it cannot reach in one step.
  const double x = forward_kinematics(m, cfg.q0).translation().x();
  cfg.walls.push_back({Eigen::Vector3d::UnitX(), x + 0.5});
  try {
    run_pipeline(m, cfg, test::stationary_commands(forward_kinematics(m, cfg.q0), 3));
    FAIL() << "expected PipelineInfeasible";
  } catch (const PipelineInfeasible& e) {
    EXPECT_EQ(e.tick(), 0u);
  }
}

TEST(Retarget, WallIsRespected) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  cfg.walls.push_back({Eigen::Vector3d::UnitY(), 0.1});
  const auto report = run_pipeline(m, cfg, circle());
  // The wall row predicts one step to first order; curvature adds O(dt^2).
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& t : report.ticks) lowest = std::min(lowest, forward_kinematics(m, t.q).translation().y());
  EXPECT_GE(lowest, 0.1 - 1e-6);
  EXPECT_LT(lowest, 0.1 + 1e-3);
}

TEST(Retarget, Deterministic) {
  const RobotModel m = three_link();
  PipelineConfig cfg = circle_config();
  cfg.latency.delay = 3;
  cfg.latency.tau = Eigen::VectorXd::Constant(1, 0.02);
  const auto a = run_pipeline(m, cfg, circle());
  const auto b = run_pipeline(m, cfg, circle());
  ASSERT_EQ(a.ticks.size(), b.ticks.size());
  for (std::size_t i = 0; i < a.ticks.size(); ++i) {
    EXPECT_EQ(a.ticks[i].q, b.ticks[i].q);
    EXPECT_EQ(a.ticks[i].c1, b.ticks[i].c1);
  }
  EXPECT_EQ(a.summary.mean_position_error, b.summary.mean_position_error);
}

TEST(Retarget, ConfigValidation) {
  const RobotModel m = three_link();
  PipelineConfig cfg;
  cfg.latency.delay = -1;
  EXPECT_THROW(resolve_config(m, cfg), std::invalid_argument);
  cfg = PipelineConfig{};
  cfg.latency.tau = Eigen::VectorXd::Constant(1, -0.1);
  EXPECT_THROW(resolve_config(m, cfg), std::invalid_argument);
  cfg = PipelineConfig{};
  cfg.q0 = Eigen::Vector2d::Zero();
  EXPECT_THROW(resolve_config(m, cfg), std::invalid_argument);
  cfg = PipelineConfig{};
  cfg.q0 = Eigen::Vector3d(3.0, 0.0, 0.0);
  EXPECT_THROW(resolve_config(m, cfg), std::invalid_argument);
  const PipelineConfig ok = resolve_config(m, PipelineConfig{});
  EXPECT_EQ(ok.q_bias, ok.q0);
  EXPECT_EQ(ok.h, Eigen::VectorXd::Ones(3));
}

TEST(Relay, ConstantStreamGivesZeroSteps) {
  std::mt19937_64 rng(41);
  const auto steps = relay_setpoints(test::stationary_commands(test::random_pose(rng), 6));
  ASSERT_EQ(steps.size(), 5u);
  for (const auto& d : steps) EXPECT_EQ(d.vector().norm(), 0.0);
}

TEST(Relay, RoundTripAndFrameInvariance) {
  std::mt19937_64 rng(42);
  const auto poses = test::random_window(rng, 40);
  std::vector<GripperSample> s, moved;
  const Posed g = test::random_pose(rng, 2.0);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    s.push_back({0.1 * static_cast<double>(k), poses[k], false});
    moved.push_back({0.1 * static_cast<double>(k), g * poses[k], false});
  }
  const auto steps = relay_setpoints(GripperTrajectory(s));
  const auto back = reconstruct_setpoints(poses.front(), steps);
  ASSERT_EQ(back.size(), poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    EXPECT_LT((back[k].matrix() - poses[k].matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
  const auto moved_steps = relay_setpoints(GripperTrajectory(moved));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    EXPECT_LT((steps[k].vector() - moved_steps[k].vector()).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_THROW(relay_setpoints(test::stationary_commands(Posed(), 1)), std::invalid_argument);
}

TEST(Embodiments, IdenticalModelsGiveIdenticalRows) {
  const std::vector<RobotModel> models{three_link(), three_link()};
  const std::vector<PipelineConfig> cfgs{circle_config()};
  const auto rows = compare_embodiments(models, cfgs, circle());
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_TRUE(rows[0].summary && rows[1].summary);
  EXPECT_EQ(rows[0].summary->mean_position_error, rows[1].summary->mean_position_error);
  EXPECT_EQ(rows[0].invariant_distance, rows[1].invariant_distance);
  EXPECT_GT(rows[0].invariant_distance, 0.0);
}

TEST(Embodiments, SlowerJointsTrackWorseOnFastMotion) {
  const RobotModel base = three_link();
  const std::vector<RobotModel> models{base, base.with_velocity_scale(0.2)};
  const std::vector<PipelineConfig> cfgs{circle_config()};
  const auto fast = test::circle_commands({0.45, 0.15}, 0.1, 0.5, 10.0, 60);
  const auto rows = compare_embodiments(models, cfgs, fast);
  ASSERT_TRUE(rows[0].summary && rows[1].summary);
  EXPECT_GE(rows[1].summary->mean_position_error, rows[0].summary->mean_position_error);
}

TEST(Embodiments, FailuresAreReportedPerModel) {
  const std::vector<RobotModel> models{three_link(), test::planar_arm({0.5, 0.4})};
  const std::vector<PipelineConfig> cfgs{circle_config()};
  const auto rows = compare_embodiments(models, cfgs, circle());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].summary.has_value());
  EXPECT_FALSE(rows[1].summary.has_value());
  EXPECT_FALSE(rows[1].error.empty());
}

TEST(Embodiments, ExactRealizationHasZeroDistance) {
  const auto cmds = circle();
  const auto poses = cmds.poses();
  EXPECT_EQ(trajectory_invariant_distance(poses, poses, 10), 0.0);
}

}  // namespace
}  // namespace xmr
