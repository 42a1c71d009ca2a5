#pragma once

// Building blocks shared by the hierarchical IK solvers.

#include <vector>

#include <Eigen/Dense>

#include "xmr/ik.hpp"

namespace xmr::detail {

/// Geometry of one priority level, independent of the current solution.
///
/// A level may only move a inside range(N), where N is H-orthonormal
/// (N^T H N = I). Inside those coordinates y, the task rows are T y = s * t
/// with orthonormal rows T, and Z spans the remaining directions, handed to
/// the next level as N * Z. The target is t = F (xdot - J a_prev).
struct LevelStructure {
  Eigen::MatrixXd N;
  Eigen::MatrixXd T;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd F;
  bool scalable = true;
};

inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kSingularThreshold = 1e-4;
inline constexpr double kDamping = 1e-6;

/// Tasks sorted by priority after validating shapes and uniqueness.
std::vector<TaskSpec> sorted_tasks(const std::vector<TaskSpec>& tasks, Eigen::Index n);

std::vector<LevelStructure> prepare_levels(const std::vector<TaskSpec>& sorted, const Eigen::VectorXd& h);

Eigen::VectorXd level_targets(const LevelStructure& level, const TaskSpec& task, const Eigen::VectorXd& a_prev);

/// Checks dimensions and ordering of bounds; returns false when some lower
/// bound exceeds its upper bound.
bool validate_constraints(const ConstraintSet& c, Eigen::Index n);

/// Sets status from the scales (unless already infeasible), pads missing
/// scales with zero and lists the joints resting on a box bound.
void finalize_solution(IkSolution& sol, const ConstraintSet& c, std::size_t task_count);

/// Euclidean projection of x_ref onto {x : lo(theta) <= B x <= hi(theta)}
/// followed as theta sweeps [0, 1], with bounds moving linearly from
/// (lo0, hi0) to (lo1, hi1). Infinite entries mark missing sides. At
/// theta = 0 the caller guarantees that the current active set is optimal.
class ProjectionPath {
 public:
  void reset(const Eigen::VectorXd& x_ref);

  /// Follows the path to theta = 1 or to the first point beyond which the
  /// bounds admit no solution. Returns the theta reached.
  double follow(const Eigen::MatrixXd& B, const Eigen::VectorXd& lo0, const Eigen::VectorXd& lo1,
                const Eigen::VectorXd& hi0, const Eigen::VectorXd& hi1);

  const Eigen::VectorXd& x() const { return x_; }
  bool hit_iteration_cap() const { return capped_; }

 private:
  struct Active {
    Eigen::Index row;
    int side;  // -1 lower, +1 upper, 0 equality
  };

  Eigen::VectorXd x_ref_;
  Eigen::VectorXd x_;
  std::vector<Active> active_;
  bool capped_ = false;
};

}  // namespace xmr::detail
