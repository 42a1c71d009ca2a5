#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xmr/ik.hpp"
#include "xmr/kinematics.hpp"
#include "xmr/se3.hpp"
#include "xmr/trajectory.hpp"

namespace xmr {

/// Joint-level response between the commanded and the realized configuration:
/// a pure delay of `delay` IK ticks followed by a first-order lag with time
/// constant tau per DOF. An empty tau means no lag; a single entry applies to
/// every DOF.
struct LatencyModel {
  Eigen::VectorXd tau;
  int delay = 0;
};

/// Half-space normal . p >= offset on the gripper position, root frame.
struct WallSpec {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

/// Empty vectors take defaults when the pipeline starts: q0 = 0 clamped to
/// the limits, q_bias = q0, k_bias = 1 and h = 1 for every DOF.
struct PipelineConfig {
  double policy_rate = 10.0;
  double ik_rate = 100.0;
  Vector6d k_grip = Vector6d::Constant(10.0);
  Eigen::VectorXd k_bias;
  Eigen::VectorXd h;
  Eigen::VectorXd q0;
  Eigen::VectorXd q_bias;
  LatencyModel latency;
  std::vector<WallSpec> walls;
};

/// Copy of `config` with every empty vector filled for `model`. Throws
/// std::invalid_argument on rates that are not integer multiples, negative
/// latency, or vectors of the wrong size.
PipelineConfig resolve_config(const RobotModel& model, const PipelineConfig& config);

/// IK ticks consumed by each setpoint.
int ticks_per_setpoint(const PipelineConfig& config);

struct TickRecord {
  double t = 0.0;
  Eigen::VectorXd q;     // realized configuration after the tick
  Eigen::VectorXd qdot;  // realized velocity over the tick
  double c1 = 1.0;
  std::vector<int> saturated;
};

/// Error between a setpoint and the realized gripper pose at the end of its hold.
struct SetpointError {
  double t = 0.0;
  double position = 0.0;     // m
  double orientation = 0.0;  // rad
};

struct RetargetSummary {
  std::size_t ticks = 0;
  std::size_t setpoints = 0;
  double max_position_error = 0.0;
  double mean_position_error = 0.0;
  double max_orientation_error = 0.0;
  double mean_orientation_error = 0.0;
  std::size_t limit_violations = 0;
  std::size_t clamp_events = 0;
  double saturated_fraction = 0.0;  // ticks with c1 < 1
};

struct RetargetReport {
  std::vector<TickRecord> ticks;
  std::vector<SetpointError> tracking;
  std::vector<Posed> realized;  // gripper pose at the end of each hold
  RetargetSummary summary;
};

class PipelineInfeasible : public std::runtime_error {
 public:
  explicit PipelineInfeasible(std::size_t tick);
  std::size_t tick() const { return tick_; }

 private:
  std::size_t tick_;
};

/// Streams `commands` through the IK at ik_rate. Each setpoint is held for
/// ticks_per_setpoint ticks regardless of its timestamp. The IK runs on the
/// commanded configuration, which is clamped to the position limits after
/// integration; the realized configuration follows it through the latency
/// model. Throws PipelineInfeasible when a tick has no feasible solution.
RetargetReport run_pipeline(const RobotModel& model, const PipelineConfig& config, const GripperTrajectory& commands);

/// Frame-local increments between consecutive command poses.
std::vector<DifferentialPosed> relay_setpoints(const GripperTrajectory& commands);

/// Absolute poses rebuilt from a start pose and its increments.
std::vector<Posed> reconstruct_setpoints(const Posed& start, std::span<const DifferentialPosed> steps);

struct EmbodimentResult {
  std::string model;
  std::optional<RetargetSummary> summary;  // empty when the run failed
  double invariant_distance = 0.0;         // commanded vs realized gripper stream
  std::string error;
};

/// Runs the pipeline for every model on the same commands. `configs` holds one
/// entry per model, or a single entry shared by all of them. A failed run
/// fills `error` and the remaining models are still evaluated.
std::vector<EmbodimentResult> compare_embodiments(std::span<const RobotModel> models,
                                                  std::span<const PipelineConfig> configs,
                                                  const GripperTrajectory& commands, std::size_t window = 10);

}  // namespace xmr
