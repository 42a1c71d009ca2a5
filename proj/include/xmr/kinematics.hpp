#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xmr/se3.hpp"

namespace xmr {

enum class JointKind { Revolute, Prismatic, PlanarBase, FloatingBase, Fixed };

/// Number of configuration entries a joint of this kind contributes.
constexpr int dof_count(JointKind kind) {
  switch (kind) {
    case JointKind::Revolute:
    case JointKind::Prismatic:
      return 1;
    case JointKind::PlanarBase:
      return 3;
    case JointKind::FloatingBase:
      return 6;
    case JointKind::Fixed:
      return 0;
  }
  return 0;
}

const char* to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& s);

/// Per-DOF limits. Position bounds may be infinite (unbounded DOF).
struct DofLimits {
  double q_min = -std::numeric_limits<double>::infinity();
  double q_max = std::numeric_limits<double>::infinity();
  double v_max = 1.0;
  double a_max = 10.0;
};

/// One joint of the tree. A planar base is (x, y, yaw) in the origin frame; a
/// floating base is (x, y, z, rotation vector) with angular velocities
/// expressed in the origin frame.
struct JointSpec {
  std::string name;
  JointKind kind = JointKind::Revolute;
  std::string parent;
  std::string child;
  Posed origin;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  std::vector<DofLimits> limits;  // one entry per DOF
};

struct GripperFrame {
  std::string link;
  Posed offset;
};

/// Immutable kinematic tree with a single gripper frame.
class RobotModel {
 public:
  RobotModel(std::vector<JointSpec> joints, GripperFrame gripper, std::string name = {});

  const std::string& name() const { return name_; }
  int dof() const { return dof_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  int dof_offset(std::size_t joint) const { return offsets_[joint]; }
  const GripperFrame& gripper() const { return gripper_; }
  const std::string& root_link() const { return root_; }

  /// Joint indices from the root to the gripper link, in chain order.
  const std::vector<std::size_t>& gripper_chain() const { return chain_; }

  const Eigen::VectorXd& q_min() const { return q_min_; }
  const Eigen::VectorXd& q_max() const { return q_max_; }
  const Eigen::VectorXd& v_max() const { return v_max_; }
  const Eigen::VectorXd& a_max() const { return a_max_; }

  /// True for the three rotation-vector entries of a floating base.
  bool is_rotation_vector_dof(int i) const { return rotvec_dof_[static_cast<std::size_t>(i)]; }

  /// Copy with every velocity limit multiplied by `factor`.
  RobotModel with_velocity_scale(double factor) const;

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  GripperFrame gripper_;
  std::string root_;
  std::vector<int> offsets_;
  std::vector<std::size_t> chain_;
  std::vector<bool> rotvec_dof_;
  Eigen::VectorXd q_min_, q_max_, v_max_, a_max_;
  int dof_ = 0;
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

/// Transform of a joint's child link in its parent link frame.
Posed joint_transform(const JointSpec& joint, const Eigen::Ref<const Eigen::VectorXd>& q_joint);

/// Gripper pose in the root frame.
Posed forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q);

/// 6 x dof geometric Jacobian of the gripper frame in the root frame, linear
/// rows first. Columns of joints off the gripper chain are zero.
Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& model, const Eigen::VectorXd& q);

/// q advanced by velocity v over dt. Floating-base orientations use the
/// exponential update; every other entry is Euler-integrated.
Eigen::VectorXd integrate(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& v, double dt);

struct VelocityBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Box on the next joint velocity combining velocity, position (over one step
/// dt) and acceleration limits. Position and velocity limits win over the
/// acceleration limit; when they cannot all hold, both sides meet at the
/// feasible point closest to the acceleration window.
VelocityBounds velocity_bounds(const RobotModel& model, const JointState& state, double dt);

Eigen::VectorXd clamp_to_limits(const RobotModel& model, const Eigen::VectorXd& q);
bool within_limits(const RobotModel& model, const Eigen::VectorXd& q, double tol = 1e-9);

}  // namespace xmr
