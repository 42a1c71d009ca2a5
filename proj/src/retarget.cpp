#include "xmr/retarget.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "xmr/dhb.hpp"

namespace xmr {

namespace {

// Integration overshoot below this is rounding at an active position bound.
constexpr double kClampTolerance = 1e-9;

Eigen::VectorXd broadcast(const Eigen::VectorXd& v, int n, double fallback, const char* what) {
  if (v.size() == 0) return Eigen::VectorXd::Constant(n, fallback);
  if (v.size() == 1) return Eigen::VectorXd::Constant(n, v[0]);
  if (v.size() != n) {
    throw std::invalid_argument(std::string("pipeline config: ") + what + " has " + std::to_string(v.size()) +
                                " entries, model has " + std::to_string(n) + " DOF");
  }
  return v;
}

/// Per-DOF weight of the new input in the first-order lag, exact for a
/// piecewise-constant input over one tick.
Eigen::VectorXd lag_gain(const Eigen::VectorXd& tau, double dt) {
  Eigen::VectorXd alpha(tau.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    alpha[i] = tau[i] > 0.0 ? -std::expm1(-dt / tau[i]) : 1.0;
  }
  return alpha;
}

}  // namespace

PipelineInfeasible::PipelineInfeasible(std::size_t tick)
    : std::runtime_error("IK infeasible at tick " + std::to_string(tick)), tick_(tick) {}

int ticks_per_setpoint(const PipelineConfig& config) {
  if (!(config.policy_rate > 0.0) || !(config.ik_rate > 0.0)) {
    throw std::invalid_argument("pipeline config: rates must be positive");
  }
  const double ratio = config.ik_rate / config.policy_rate;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw std::invalid_argument("pipeline config: ik_rate must be an integer multiple of policy_rate");
  }
  return static_cast<int>(rounded);
}

PipelineConfig resolve_config(const RobotModel& model, const PipelineConfig& config) {
  const int n = model.dof();
  PipelineConfig out = config;
  ticks_per_setpoint(out);
  if (out.latency.delay < 0) throw std::invalid_argument("pipeline config: delay must be >= 0");
  out.latency.tau = broadcast(out.latency.tau, n, 0.0, "tau");
  if ((out.latency.tau.array() < 0.0).any() || !out.latency.tau.allFinite()) {
    throw std::invalid_argument("pipeline config: tau must be finite and >= 0");
  }
  if (!out.k_grip.allFinite()) throw std::invalid_argument("pipeline config: k_grip must be finite");
  out.k_bias = broadcast(out.k_bias, n, 1.0, "k_bias");
  out.h = broadcast(out.h, n, 1.0, "h");
  if ((out.h.array() <= 0.0).any()) throw std::invalid_argument("pipeline config: h must be positive");
  out.q0 = out.q0.size() == 0 ? clamp_to_limits(model, Eigen::VectorXd::Zero(n)) : broadcast(out.q0, n, 0.0, "q0");
  if (!within_limits(model, out.q0)) throw std::invalid_argument("pipeline config: q0 violates the joint limits");
  out.q_bias = out.q_bias.size() == 0 ? out.q0 : broadcast(out.q_bias, n, 0.0, "q_bias");
  for (const auto& w : out.walls) {
    if (!(w.normal.norm() > 0.0)) throw std::invalid_argument("pipeline config: wall normal must be nonzero");
  }
  return out;
}

RetargetReport run_pipeline(const RobotModel& model, const PipelineConfig& raw_config,
                            const GripperTrajectory& commands) {
  const PipelineConfig config = resolve_config(model, raw_config);
  const int hold = ticks_per_setpoint(config);
  const double dt = 1.0 / config.ik_rate;
  const int n = model.dof();
  const Eigen::VectorXd alpha = lag_gain(config.latency.tau, dt);

  JointState cmd{config.q0, Eigen::VectorXd::Zero(n)};
  Eigen::VectorXd q = config.q0;
  std::deque<Eigen::VectorXd> pending(static_cast<std::size_t>(config.latency.delay), config.q0);

  RetargetReport report;
  report.ticks.reserve(commands.size() * static_cast<std::size_t>(hold));
  report.tracking.reserve(commands.size());
  report.realized.reserve(commands.size());

  EsnsSolver solver;
  ConstraintSet constraints;
  std::size_t scaled_ticks = 0;
  const double t0 = commands[0].t;

  for (std::size_t s = 0; s < commands.size(); ++s) {
    const Posed& target = commands[s].pose;
    for (int k = 0; k < hold; ++k) {
      const std::size_t tick = s * static_cast<std::size_t>(hold) + static_cast<std::size_t>(k);

      const auto tasks = build_tasks(model, cmd.q, target, config.q_bias, config.k_grip, config.k_bias);
      const VelocityBounds box = velocity_bounds(model, cmd, dt);
      constraints.lower = box.lower;
      constraints.upper = box.upper;
      constraints.cartesian.clear();
      for (const auto& w : config.walls) {
        constraints.cartesian.push_back(virtual_wall_row(model, cmd.q, w.normal, w.offset, dt));
      }
      IkSolution sol = solver.solve(tasks, constraints, config.h);
      if (sol.status == IkStatus::Infeasible || !sol.a.allFinite()) throw PipelineInfeasible(tick);

      const Eigen::VectorXd next = integrate(model, cmd.q, sol.a, dt);
      Eigen::VectorXd clamped = clamp_to_limits(model, next);
      if ((clamped - next).cwiseAbs().maxCoeff() > kClampTolerance) ++report.summary.clamp_events;
      cmd.q = std::move(clamped);
      cmd.qdot = sol.a;

      pending.push_back(cmd.q);
      const Eigen::VectorXd input = std::move(pending.front());
      pending.pop_front();
      const Eigen::VectorXd previous = q;
      q.array() += alpha.array() * (input - q).array();

      if (!within_limits(model, q)) ++report.summary.limit_violations;
      const double c1 = sol.scales.empty() ? 1.0 : sol.scales.front();
      if (c1 < 1.0) ++scaled_ticks;
      report.ticks.push_back(TickRecord{t0 + static_cast<double>(tick + 1) * dt, q, (q - previous) / dt, c1,
                                        std::move(sol.saturated_joints)});
    }

    const Posed reached = forward_kinematics(model, q);
    SetpointError err;
    err.t = report.ticks.back().t;
    err.position = (target.translation() - reached.translation()).norm();
    err.orientation = rotation_angle<double>(target.rotation() * reached.rotation().conjugate());
    report.tracking.push_back(err);
    report.realized.push_back(reached);
  }

  RetargetSummary& sum = report.summary;
  sum.ticks = report.ticks.size();
  sum.setpoints = report.tracking.size();
  for (const auto& e : report.tracking) {
    sum.max_position_error = std::max(sum.max_position_error, e.position);
    sum.max_orientation_error = std::max(sum.max_orientation_error, e.orientation);
    sum.mean_position_error += e.position;
    sum.mean_orientation_error += e.orientation;
  }
  sum.mean_position_error /= static_cast<double>(sum.setpoints);
  sum.mean_orientation_error /= static_cast<double>(sum.setpoints);
  sum.saturated_fraction = static_cast<double>(scaled_ticks) / static_cast<double>(sum.ticks);
  return report;
}

std::vector<DifferentialPosed> relay_setpoints(const GripperTrajectory& commands) {
  if (commands.size() < 2) throw std::invalid_argument("relay_setpoints: need at least 2 samples");
  std::vector<DifferentialPosed> out;
  out.reserve(commands.size() - 1);
  for (std::size_t k = 0; k + 1 < commands.size(); ++k) {
    out.push_back(difference(commands[k].pose, commands[k + 1].pose));
  }
  return out;
}

std::vector<Posed> reconstruct_setpoints(const Posed& start, std::span<const DifferentialPosed> steps) {
  return extend_window<double>(std::span<const Posed>(&start, 1), steps);
}

std::vector<EmbodimentResult> compare_embodiments(std::span<const RobotModel> models,
                                                  std::span<const PipelineConfig> configs,
                                                  const GripperTrajectory& commands, std::size_t window) {
  if (models.size() < 2) throw std::invalid_argument("compare_embodiments: need at least 2 models");
  if (configs.size() != 1 && configs.size() != models.size()) {
    throw std::invalid_argument("compare_embodiments: need one config, or one per model");
  }
  const std::vector<Posed> commanded = commands.poses();
  const std::size_t w = std::min(window, commanded.size());

  std::vector<EmbodimentResult> out;
  out.reserve(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    EmbodimentResult row;
    row.model = models[i].name();
    try {
      const RetargetReport report = run_pipeline(models[i], configs[configs.size() == 1 ? 0 : i], commands);
      row.summary = report.summary;
      if (w >= 3) row.invariant_distance = trajectory_invariant_distance(commanded, report.realized, w);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace xmr
