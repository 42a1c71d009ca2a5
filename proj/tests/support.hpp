#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xmr/ik.hpp"
#include "xmr/kinematics.hpp"
#include "xmr/se3.hpp"
#include "xmr/trajectory.hpp"

namespace xmr::test {

#ifndef XMR_DATA_DIR
#define XMR_DATA_DIR "data"
#endif

inline std::string data_path(const std::string& rel) { return std::string(XMR_DATA_DIR) + "/" + rel; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::Vector3d random_vector(std::mt19937_64& rng, double scale = 1.0) {
  return Eigen::Vector3d(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

inline Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

inline Posed random_pose(std::mt19937_64& rng, double scale = 1.0) {
  return Posed(random_vector(rng, scale), random_rotation(rng));
}

/// Smooth random walk of T poses with nonzero linear and angular steps.
inline std::vector<Posed> random_window(std::mt19937_64& rng, std::size_t T) {
  std::vector<Posed> out{random_pose(rng)};
  Eigen::Vector3d v = random_vector(rng, 0.1);
  Eigen::Vector3d w = random_vector(rng, 0.2);
  for (std::size_t k = 1; k < T; ++k) {
    v += random_vector(rng, 0.05);
    w += random_vector(rng, 0.1);
    DifferentialPosed d{v, w};
    out.push_back(apply(out.back(), d));
  }
  return out;
}

inline DofLimits limits(double q_lo, double q_hi, double v, double a) { return DofLimits{q_lo, q_hi, v, a}; }

inline JointSpec revolute(const std::string& name, const std::string& parent, const std::string& child,
                          const Posed& origin, const Eigen::Vector3d& axis, DofLimits lim = limits(-3, 3, 2, 20)) {
  return JointSpec{name, JointKind::Revolute, parent, child, origin, axis, {lim}};
}

/// Planar arm in the xy plane with links of the given lengths.
inline RobotModel planar_arm(const std::vector<double>& lengths, DofLimits lim = limits(-3, 3, 2, 20)) {
  std::vector<JointSpec> joints;
  std::string parent = "base";
  double prev = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string child = "link" + std::to_string(i + 1);
    joints.push_back(revolute("j" + std::to_string(i + 1), parent, child,
                              Posed::Translation(Eigen::Vector3d(prev, 0, 0)), Eigen::Vector3d::UnitZ(), lim));
    parent = child;
    prev = lengths[i];
  }
  return RobotModel(joints, GripperFrame{parent, Posed::Translation(Eigen::Vector3d(prev, 0, 0))}, "planar");
}

/// Spatial chain mixing revolute and prismatic joints with tilted axes.
inline RobotModel spatial_arm(std::mt19937_64& rng) {
  std::vector<JointSpec> joints;
  std::string parent = "base";
  for (int i = 0; i < 6; ++i) {
    const std::string child = "l" + std::to_string(i);
    JointSpec j;
    j.name = "j" + std::to_string(i);
    j.kind = i == 2 ? JointKind::Prismatic : JointKind::Revolute;
    j.parent = parent;
    j.child = child;
    j.origin = random_pose(rng, 0.3);
    j.axis = random_vector(rng).normalized();
    j.limits = {limits(-2, 2, 1.5, 15)};
    joints.push_back(j);
    parent = child;
  }
  JointSpec fixed{"tool", JointKind::Fixed, parent, "tool_link", random_pose(rng, 0.1), Eigen::Vector3d::UnitZ(), {}};
  joints.push_back(fixed);
  return RobotModel(joints, GripperFrame{"tool_link", random_pose(rng, 0.1)}, "spatial");
}

inline RobotModel planar_base_arm() {
  std::vector<JointSpec> joints;
  joints.push_back(JointSpec{"base", JointKind::PlanarBase, "world", "chassis", Posed(), Eigen::Vector3d::UnitZ(),
                             {limits(-5, 5, 1, 5)}});
  joints.push_back(revolute("shoulder", "chassis", "upper", Posed::Translation(Eigen::Vector3d(0.1, 0, 0.4)),
                            Eigen::Vector3d::UnitY()));
  joints.push_back(revolute("elbow", "upper", "fore", Posed::Translation(Eigen::Vector3d(0.3, 0, 0)),
                            Eigen::Vector3d::UnitY()));
  return RobotModel(joints, GripperFrame{"fore", Posed::Translation(Eigen::Vector3d(0.25, 0, 0))}, "planar_base");
}

inline RobotModel floating_base_arm() {
  std::vector<JointSpec> joints;
  joints.push_back(JointSpec{"root", JointKind::FloatingBase, "world", "torso",
                             Posed::Translation(Eigen::Vector3d(0, 0, 0.8)), Eigen::Vector3d::UnitZ(),
                             {limits(-2, 2, 1, 5)}});
  joints.push_back(revolute("waist", "torso", "chest", Posed::Translation(Eigen::Vector3d(0, 0, 0.2)),
                            Eigen::Vector3d::UnitZ()));
  joints.push_back(revolute("shoulder", "chest", "arm", Posed::Translation(Eigen::Vector3d(0, 0.2, 0.1)),
                            Eigen::Vector3d::UnitY()));
  joints.push_back(JointSpec{"slide", JointKind::Prismatic, "arm", "fore",
                             Posed::Translation(Eigen::Vector3d(0.3, 0, 0)), Eigen::Vector3d::UnitX(),
                             {limits(0, 0.2, 0.5, 5)}});
  return RobotModel(joints, GripperFrame{"fore", Posed::Translation(Eigen::Vector3d(0.1, 0, 0))}, "floating");
}

/// Random configuration strictly inside the limits (unbounded DOF in [-2, 2]).
inline Eigen::VectorXd random_configuration(const RobotModel& model, std::mt19937_64& rng) {
  Eigen::VectorXd q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const double lo = std::isfinite(model.q_min()[i]) ? model.q_min()[i] : -2.0;
    const double hi = std::isfinite(model.q_max()[i]) ? model.q_max()[i] : 2.0;
    q[i] = uniform(rng, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
  }
  return q;
}

/// Random two-level IK instance: a task of m <= n rows and a posture task,
/// with box bounds that are narrow (likely active) with probability 1/2.
struct RandomInstance {
  std::vector<TaskSpec> tasks;
  ConstraintSet constraints;
  Eigen::VectorXd h;
};

inline RandomInstance random_instance(std::mt19937_64& rng, int n, bool weighted = true, int walls = 0) {
  RandomInstance inst;
  const int m = std::uniform_int_distribution<int>(1, std::min(n, 3))(rng);
  TaskSpec t1;
  t1.priority = 1;
  t1.jacobian = Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return uniform(rng, -1, 1); });
  t1.xdot_des = Eigen::VectorXd::NullaryExpr(m, [&]() { return uniform(rng, -2, 2); });
  TaskSpec t2;
  t2.priority = 2;
  t2.jacobian = Eigen::MatrixXd::Identity(n, n);
  t2.xdot_des = Eigen::VectorXd::NullaryExpr(n, [&]() { return uniform(rng, -1, 1); });
  inst.tasks = {t1, t2};
  inst.h = weighted ? Eigen::VectorXd(Eigen::VectorXd::NullaryExpr(n, [&]() { return uniform(rng, 0.5, 2.0); }))
                    : Eigen::VectorXd(Eigen::VectorXd::Ones(n));
  inst.constraints.lower.resize(n);
  inst.constraints.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    const double width = std::bernoulli_distribution(0.5)(rng) ? uniform(rng, 0.05, 0.5) : uniform(rng, 2.0, 5.0);
    // Boxes mostly contain zero, some sit to one side as under acceleration limits.
    const double center = std::bernoulli_distribution(0.2)(rng) ? uniform(rng, -0.5, 0.5) : 0.0;
    inst.constraints.lower[i] = center - width * uniform(rng, 0.3, 1.0);
    inst.constraints.upper[i] = center + width * uniform(rng, 0.3, 1.0);
  }
  for (int w = 0; w < walls; ++w) {
    CartesianRow row;
    row.row = Eigen::RowVectorXd::NullaryExpr(n, [&]() { return uniform(rng, -1, 1); });
    row.lower = -uniform(rng, 0.1, 1.0);
    inst.constraints.cartesian.push_back(row);
  }
  return inst;
}

inline double constraint_violation(const ConstraintSet& c, const Eigen::VectorXd& a) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max({worst, c.lower[i] - a[i], a[i] - c.upper[i]});
  }
  for (const auto& row : c.cartesian) {
    const double v = row.row.dot(a);
    worst = std::max({worst, row.lower - v, v - row.upper});
  }
  return worst;
}

/// Gripper commands sampled at `rate` along a circle in the plane z = 0 with
/// the gripper x-axis held along the root x-axis.
inline GripperTrajectory circle_commands(const Eigen::Vector2d& center, double radius, double frequency,
                                         double rate, std::size_t samples) {
  std::vector<GripperSample> out;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / rate;
    const double phase = 2.0 * std::numbers::pi * frequency * t;
    out.push_back({t, Posed::Translation(Eigen::Vector3d(center.x() + radius * std::cos(phase),
                                                         center.y() + radius * std::sin(phase), 0.0)),
                   false});
  }
  return GripperTrajectory(out);
}

inline GripperTrajectory stationary_commands(const Posed& pose, std::size_t samples, double rate = 10.0) {
  std::vector<GripperSample> out;
  for (std::size_t k = 0; k < samples; ++k) out.push_back({static_cast<double>(k) / rate, pose, false});
  return GripperTrajectory(out);
}

/// Discrete closed loop of the proportional law in Cartesian space with a
/// perfect inverse: x <- x + dt K (x_sp - x), each setpoint held for `hold`
/// ticks. Returns the position error at the end of every hold.
inline std::vector<double> proportional_tracking_oracle(const GripperTrajectory& commands, Eigen::Vector3d x,
                                                        double k_grip, int hold, double dt) {
  std::vector<double> errors;
  for (std::size_t s = 0; s < commands.size(); ++s) {
    const Eigen::Vector3d sp = commands[s].pose.translation();
    for (int k = 0; k < hold; ++k) x += dt * k_grip * (sp - x);
    errors.push_back((sp - x).norm());
  }
  return errors;
}

inline double mean_from(const std::vector<double>& v, std::size_t first) {
  double sum = 0.0;
  for (std::size_t i = first; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(v.size() - first);
}

inline double max_from(const std::vector<double>& v, std::size_t first) {
  double worst = 0.0;
  for (std::size_t i = first; i < v.size(); ++i) worst = std::max(worst, v[i]);
  return worst;
}

}  // namespace xmr::test
