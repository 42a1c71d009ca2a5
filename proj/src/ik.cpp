#include "xmr/ik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xmr/detail/hierarchy.hpp"

namespace xmr {

const char* to_string(IkStatus status) {
  switch (status) {
    case IkStatus::Optimal:
      return "optimal";
    case IkStatus::Saturated:
      return "saturated";
    case IkStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

Vector6d pose_error(const Posed& target, const Posed& current) {
  Vector6d e;
  e.head<3>() = target.translation() - current.translation();
  e.tail<3>() = log_so3<double>(target.rotation() * current.rotation().conjugate());
  return e;
}

std::vector<TaskSpec> build_tasks(const RobotModel& model, const Eigen::VectorXd& q, const Posed& x_des,
                                  const Eigen::VectorXd& q_bias, const Vector6d& k_grip,
                                  const Eigen::VectorXd& k_bias) {
  const int n = model.dof();
  if (q.size() != n || q_bias.size() != n || k_bias.size() != n) {
    throw std::invalid_argument("build_tasks: configuration, bias and gain sizes must match the model DOF");
  }
  std::vector<TaskSpec> tasks(2);
  tasks[0].priority = 1;
  tasks[0].jacobian = jacobian(model, q);
  tasks[0].xdot_des = k_grip.cwiseProduct(pose_error(x_des, forward_kinematics(model, q)));
  tasks[1].priority = 2;
  tasks[1].jacobian = Eigen::MatrixXd::Identity(n, n);
  tasks[1].xdot_des = k_bias.cwiseProduct(q_bias - q);
  return tasks;
}

CartesianRow virtual_wall_row(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::Vector3d& normal,
                              double offset, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("virtual_wall_row: dt must be positive");
  const double len = normal.norm();
  if (!(len > 0.0)) throw std::invalid_argument("virtual_wall_row: zero normal");
  const Eigen::Vector3d nrm = normal / len;
  const Eigen::Vector3d p = forward_kinematics(model, q).translation();
  CartesianRow row;
  row.row = nrm.transpose() * jacobian(model, q).topRows<3>();
  row.lower = (offset / len - nrm.dot(p)) / dt;
  return row;
}

namespace {

/// Starting bounds for a path that ends at (lo1, hi1): wide enough that the
/// reference point sits strictly inside, so rows reach their bounds one at a
/// time instead of all at the start.
void relaxed_bounds(const Eigen::VectorXd& lo1, const Eigen::VectorXd& hi1, const Eigen::VectorXd& v_ref,
                    Eigen::VectorXd& lo0, Eigen::VectorXd& hi0) {
  lo0 = lo1.cwiseMin(v_ref).array() - 1.0;
  hi0 = hi1.cwiseMax(v_ref).array() + 1.0;
}

/// The first level cannot hold its task at any scale when the constraints
/// exclude a = 0 and every scaled task velocity. Its scale is then zero and a
/// becomes the feasible point of least H-norm; its task-row component is what
/// the lower levels keep fixed.
bool min_norm_feasible(const Eigen::MatrixXd& N, const Eigen::MatrixXd& C, const Eigen::VectorXd& c_lo,
                       const Eigen::VectorXd& c_hi, detail::ProjectionPath& path, Eigen::VectorXd& a) {
  const Eigen::MatrixXd B = C * N;
  Eigen::VectorXd lo0, hi0;
  relaxed_bounds(c_lo, c_hi, Eigen::VectorXd::Zero(c_lo.size()), lo0, hi0);
  path.reset(Eigen::VectorXd::Zero(N.cols()));
  if (path.follow(B, lo0, c_lo, hi0, c_hi) < 1.0 || path.hit_iteration_cap()) return false;
  a = N * path.x();
  return true;
}

}  // namespace

IkSolution EsnsSolver::solve(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                             const Eigen::VectorXd& h) {
  const Eigen::Index n = h.size();
  IkSolution sol;
  sol.a = Eigen::VectorXd::Zero(n);
  const auto sorted = detail::sorted_tasks(tasks, n);
  if (!detail::validate_constraints(constraints, n)) {
    sol.scales.assign(sorted.size(), 0.0);
    sol.status = IkStatus::Infeasible;
    return sol;
  }
  const auto levels = detail::prepare_levels(sorted, h);

  // All inequality rows on a: the box first, then the cartesian rows.
  const auto nc = n + static_cast<Eigen::Index>(constraints.cartesian.size());
  Eigen::MatrixXd C(nc, n);
  Eigen::VectorXd c_lo(nc), c_hi(nc);
  C.topRows(n).setIdentity();
  c_lo.head(n) = constraints.lower;
  c_hi.head(n) = constraints.upper;
  for (std::size_t i = 0; i < constraints.cartesian.size(); ++i) {
    const auto r = n + static_cast<Eigen::Index>(i);
    C.row(r) = constraints.cartesian[i].row;
    c_lo[r] = constraints.cartesian[i].lower;
    c_hi[r] = constraints.cartesian[i].upper;
  }

  // Levels with no usable freedom still run so that the returned a is
  // always feasible, even when no task constrains it.
  std::vector<detail::LevelStructure> work = levels;
  if (work.empty()) {
    detail::LevelStructure L;
    L.N = h.cwiseSqrt().cwiseInverse().asDiagonal();
    L.T.resize(0, n);
    L.Z = Eigen::MatrixXd::Identity(n, n);
    L.F.resize(0, 0);
    work.push_back(std::move(L));
  }

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  detail::ProjectionPath path;
  for (std::size_t li = 0; li < work.size(); ++li) {
    const auto& L = work[li];
    const Eigen::Index p = L.Z.cols();
    const Eigen::Index d = p + 1;
    const bool has_task = li < sorted.size() && L.T.rows() > 0;
    const bool scalable = has_task && L.scalable;

    Eigen::VectorXd u = Eigen::VectorXd::Zero(L.N.cols());
    if (has_task) u = L.T.transpose() * detail::level_targets(L, sorted[li], a);
    const Eigen::VectorXd g = L.N.transpose() * h.cwiseProduct(a);
    Eigen::VectorXd x_ref(d);
    x_ref.head(p) = -(L.Z.transpose() * g);
    x_ref[p] = 1.0;

    rows_.resize(nc + 2, d);
    lo1_.resize(nc + 2);
    hi1_.resize(nc + 2);
    Eigen::Index m = 0;
    bool consistent = true;
    const Eigen::MatrixXd NZ = L.N * L.Z;
    const Eigen::VectorXd Nu = L.N * u;
    for (Eigen::Index j = 0; j < nc; ++j) {
      Eigen::VectorXd b(d);
      b.head(p) = NZ.transpose() * C.row(j).transpose();
      b[p] = C.row(j).dot(Nu);
      const double shift = C.row(j).dot(a);
      double lo = c_lo[j] - shift;
      double hi = c_hi[j] - shift;
      if (li > 0) {
        // The previous level's a is feasible; keep rounding from cutting it off.
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
      }
      if (b.norm() <= 1e-14) {
        if (lo > 1e-9 || hi < -1e-9) consistent = false;
        continue;
      }
      rows_.row(m) = b.transpose();
      lo1_[m] = lo;
      hi1_[m] = hi;
      ++m;
    }
    rows_.row(m).setZero();
    rows_(m, p) = 1.0;
    lo1_[m] = scalable ? 0.0 : 1.0;
    hi1_[m] = 1.0;
    ++m;
    if (!consistent) {
      sol.status = IkStatus::Infeasible;
      break;
    }

    Eigen::MatrixXd B = rows_.topRows(m);
    Eigen::VectorXd lo1 = lo1_.head(m), hi1 = hi1_.head(m);
    const Eigen::VectorXd v_ref = B * x_ref;
    Eigen::VectorXd lo0, hi0;
    relaxed_bounds(lo1, hi1, v_ref, lo0, hi0);

    path.reset(x_ref);
    if (path.follow(B, lo0, lo1, hi0, hi1) < 1.0 || path.hit_iteration_cap()) {
      // Below the first level the previous a is feasible, so only the first
      // level can get here without the constraints being inconsistent.
      if (li > 0 || path.hit_iteration_cap() || !min_norm_feasible(L.N, C, c_lo, c_hi, path, a)) {
        sol.status = IkStatus::Infeasible;
        break;
      }
      if (li < sorted.size()) sol.scales.push_back(0.0);
      continue;
    }
    Eigen::VectorXd x = path.x();
    double s = scalable ? x[p] : 1.0;

    if (scalable && x[p] < 1.0) {
      // Push a rising lower bound on s through the feasible set.
      B.conservativeResize(m + 1, d);
      B.row(m).setZero();
      B(m, p) = 1.0;
      lo0 = lo1;
      hi0 = hi1;
      lo0.conservativeResize(m + 1);
      hi0.conservativeResize(m + 1);
      lo1.conservativeResize(m + 1);
      hi1.conservativeResize(m + 1);
      lo0[m] = x[p];
      lo1[m] = 1.0;
      hi0[m] = hi1[m] = std::numeric_limits<double>::infinity();
      const double reached = path.follow(B, lo0, lo1, hi0, hi1);
      x = path.x();
      s = reached >= 1.0 ? 1.0 : x[p];
    }

    const Eigen::VectorXd y = x[p] * u + L.Z * x.head(p);
    a += L.N * y;
    if (li < sorted.size()) sol.scales.push_back(std::clamp(s, 0.0, 1.0));
  }

  sol.a = a;
  detail::finalize_solution(sol, constraints, sorted.size());
  return sol;
}

IkSolution solve_esns(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                      const Eigen::VectorXd& h) {
  EsnsSolver solver;
  return solver.solve(tasks, constraints, h);
}

IkSolution solve_esns(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints) {
  return solve_esns(tasks, constraints, Eigen::VectorXd::Ones(constraints.lower.size()));
}

}  // namespace xmr
