#pragma once

#include <vector>

#include <Eigen/Dense>

#include "xmr/ik.hpp"

namespace xmr {

struct ReferenceDiagnostics {
  double kkt_residual = 0.0;  // worst level
  long systems_solved = 0;
};

/// Brute-force solver for the same prioritized problem as solve_esns, meant
/// as a test oracle for small n (up to 12). For each level it maximizes the
/// scale by enumerating polytope vertices, then minimizes a^T H a at that
/// scale by enumerating active sets and checking the KKT conditions.
IkSolution solve_reference_qp(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                              const Eigen::VectorXd& h, ReferenceDiagnostics* diagnostics = nullptr);

/// Whether the highest-priority task can run at scale c1 (its rows J a equal
/// to c1 times the filtered target) without breaking the constraints.
bool reference_scale_feasible(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                              const Eigen::VectorXd& h, double c1);

}  // namespace xmr
