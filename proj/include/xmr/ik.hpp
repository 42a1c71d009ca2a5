#pragma once

#include <vector>

#include <Eigen/Dense>

#include "xmr/kinematics.hpp"
#include "xmr/se3.hpp"

namespace xmr {

/// One level of the task hierarchy: drive `jacobian * a` toward `xdot_des`.
struct TaskSpec {
  int priority = 1;  // 1 is the highest priority
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd xdot_des;
  bool scalable = true;
};

/// Linear inequality lower <= row * a <= upper; either side may be infinite.
struct CartesianRow {
  Eigen::RowVectorXd row;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct ConstraintSet {
  Eigen::VectorXd lower;  // box on a
  Eigen::VectorXd upper;
  std::vector<CartesianRow> cartesian;
};

enum class IkStatus { Optimal, Saturated, Infeasible };

const char* to_string(IkStatus status);

struct IkSolution {
  Eigen::VectorXd a;
  std::vector<double> scales;  // one per task, in priority order
  IkStatus status = IkStatus::Optimal;
  std::vector<int> saturated_joints;  // joints sitting on a box bound
};

/// Root-frame pose error: translation difference followed by the rotation
/// vector of R_target * R_current^T.
Vector6d pose_error(const Posed& target, const Posed& current);

/// Gripper tracking task (priority 1) and posture-bias task (priority 2).
std::vector<TaskSpec> build_tasks(const RobotModel& model, const Eigen::VectorXd& q, const Posed& x_des,
                                  const Eigen::VectorXd& q_bias, const Vector6d& k_grip,
                                  const Eigen::VectorXd& k_bias);

/// Keeps the gripper on the side of the plane normal . p >= offset, applied to
/// the position reached after one step of length dt.
CartesianRow virtual_wall_row(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::Vector3d& normal,
                              double offset, double dt);

/// Prioritized velocity IK with task scaling. Levels are solved in priority
/// order; each one first maximizes its scale factor c_i in [0, 1], then picks
/// the smallest a^T H a among the maximizers, inside the null space of every
/// higher level. H is given by its diagonal.
///
/// Each level is a projection onto a polytope, computed by following a
/// piecewise-linear path of active sets while the bounds are tightened from
/// a relaxed box to the real one. A second sweep raises a lower bound on the
/// scale until the path can no longer continue, which is where c_i peaks.
///
/// Instances keep scratch storage and are not safe for concurrent use.
class EsnsSolver {
 public:
  IkSolution solve(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints, const Eigen::VectorXd& h);

 private:
  Eigen::MatrixXd rows_;
  Eigen::VectorXd lo1_, hi1_;
};

IkSolution solve_esns(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                      const Eigen::VectorXd& h);

/// Default weighting H = I.
IkSolution solve_esns(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints);

}  // namespace xmr
