#include "xmr/detail/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>

namespace xmr::detail {

std::vector<TaskSpec> sorted_tasks(const std::vector<TaskSpec>& tasks, Eigen::Index n) {
  std::set<int> seen;
  for (const auto& t : tasks) {
    if (t.jacobian.cols() != n) throw std::invalid_argument("task jacobian column count differs from DOF count");
    if (t.xdot_des.size() != t.jacobian.rows()) throw std::invalid_argument("task velocity size differs from jacobian rows");
    if (!seen.insert(t.priority).second) throw std::invalid_argument("task priorities must be unique");
  }
  std::vector<TaskSpec> out = tasks;
  std::stable_sort(out.begin(), out.end(), [](const TaskSpec& a, const TaskSpec& b) { return a.priority < b.priority; });
  return out;
}

std::vector<LevelStructure> prepare_levels(const std::vector<TaskSpec>& sorted, const Eigen::VectorXd& h) {
  if ((h.array() <= 0.0).any()) throw std::invalid_argument("weighting H must be positive definite");
  Eigen::MatrixXd N = h.cwiseSqrt().cwiseInverse().asDiagonal();
  std::vector<LevelStructure> levels;
  levels.reserve(sorted.size());
  for (const auto& task : sorted) {
    LevelStructure L;
    L.N = N;
    L.scalable = task.scalable;
    const Eigen::Index r = N.cols();
    const Eigen::Index m = task.jacobian.rows();
    if (r == 0 || m == 0) {
      L.T.resize(0, r);
      L.Z = Eigen::MatrixXd::Identity(r, r);
      L.F.resize(0, m);
    } else {
      const Eigen::MatrixXd A = task.jacobian * N;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::VectorXd& sigma = svd.singularValues();
      const double tol = kRankTolerance * std::max(1.0, sigma.size() ? sigma[0] : 0.0);
      Eigen::Index k = 0;
      while (k < sigma.size() && sigma[k] > tol) ++k;
      const double lambda = (k > 0 && sigma[k - 1] < kSingularThreshold) ? kDamping : 0.0;
      L.T = svd.matrixV().leftCols(k).transpose();
      L.Z = svd.matrixV().rightCols(r - k);
      Eigen::VectorXd gain(k);
      for (Eigen::Index i = 0; i < k; ++i) gain[i] = sigma[i] / (sigma[i] * sigma[i] + lambda * lambda);
      L.F = gain.asDiagonal() * svd.matrixU().leftCols(k).transpose();
    }
    N = N * L.Z;
    levels.push_back(std::move(L));
  }
  return levels;
}

Eigen::VectorXd level_targets(const LevelStructure& level, const TaskSpec& task, const Eigen::VectorXd& a_prev) {
  if (level.F.rows() == 0) return Eigen::VectorXd(0);
  return level.F * (task.xdot_des - task.jacobian * a_prev);
}

bool validate_constraints(const ConstraintSet& c, Eigen::Index n) {
  if (c.lower.size() != n || c.upper.size() != n) throw std::invalid_argument("box bounds must have one entry per DOF");
  for (const auto& row : c.cartesian) {
    if (row.row.size() != n) throw std::invalid_argument("cartesian constraint row has the wrong length");
  }
  if ((c.lower.array() > c.upper.array()).any()) return false;
  for (const auto& row : c.cartesian) {
    if (row.lower > row.upper) return false;
  }
  return true;
}

void finalize_solution(IkSolution& sol, const ConstraintSet& c, std::size_t task_count) {
  if (sol.status != IkStatus::Infeasible) {
    sol.status = IkStatus::Optimal;
    for (const double s : sol.scales) {
      if (s < 1.0) sol.status = IkStatus::Saturated;
    }
  }
  sol.scales.resize(task_count, 0.0);
  // Solutions land on the box up to rounding; snap them inside it.
  if (sol.status != IkStatus::Infeasible) sol.a = sol.a.cwiseMax(c.lower).cwiseMin(c.upper);
  sol.saturated_joints.clear();
  for (Eigen::Index i = 0; i < sol.a.size(); ++i) {
    if (sol.a[i] >= c.upper[i] - 1e-9 || sol.a[i] <= c.lower[i] + 1e-9) {
      sol.saturated_joints.push_back(static_cast<int>(i));
    }
  }
}

void ProjectionPath::reset(const Eigen::VectorXd& x_ref) {
  x_ref_ = x_ref;
  x_ = x_ref;
  active_.clear();
  capped_ = false;
}

namespace {

constexpr double kRateTolerance = 1e-12;
constexpr double kDependenceTolerance = 1e-6;
constexpr double kTieTolerance = 1e-12;

struct Event {
  double theta = std::numeric_limits<double>::infinity();
  int kind = 2;  // 0 removal, 1 addition
  Eigen::Index row = -1;
  int side = 0;
  std::size_t active_index = 0;

  bool before(const Event& o) const { return std::tie(theta, kind, row) < std::tie(o.theta, o.kind, o.row); }
};

}  // namespace

double ProjectionPath::follow(const Eigen::MatrixXd& B, const Eigen::VectorXd& lo0, const Eigen::VectorXd& lo1,
                              const Eigen::VectorXd& hi0, const Eigen::VectorXd& hi1) {
  const Eigen::Index m = B.rows();
  const Eigen::Index d = B.cols();
  capped_ = false;
  double theta = 0.0;
  std::vector<bool> is_active(static_cast<std::size_t>(m), false);
  for (const auto& a : active_) is_active[static_cast<std::size_t>(a.row)] = true;

  const long cap = 20 * (m + d) + 50;
  // The path is kept as xc + (theta' - theta) dx around the current theta, so
  // a nearly degenerate active set only inflates the direction, never the
  // point itself.
  Eigen::VectorXd xc;
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(d);
  for (long iter = 0;; ++iter) {
    const auto w = static_cast<Eigen::Index>(active_.size());
    Eigen::MatrixXd BW(w, d);
    Eigen::VectorXd beta(w);
    Eigen::VectorXd dbeta(w);
    for (Eigen::Index i = 0; i < w; ++i) {
      const auto& a = active_[static_cast<std::size_t>(i)];
      BW.row(i) = B.row(a.row);
      if (a.side < 0) {
        dbeta[i] = lo1[a.row] - lo0[a.row];
        beta[i] = lo0[a.row] + theta * dbeta[i];
      } else {
        dbeta[i] = hi1[a.row] - hi0[a.row];
        beta[i] = hi0[a.row] + theta * dbeta[i];
      }
    }
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(w);  // multipliers at theta
    Eigen::VectorXd q = Eigen::VectorXd::Zero(w);   // their rate of decrease
    xc = x_ref_;
    dx.setZero();
    if (w > 0) {
      // BW^T = Q R; the point moves along Q R^-T (residual), which keeps the
      // active rows accurate to cond(R) rather than cond(R)^2.
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(BW.transpose());
      const auto R = qr.matrixQR().topLeftCorner(w, w).triangularView<Eigen::Upper>();
      const Eigen::VectorXd y0 = R.transpose().solve(BW * x_ref_ - beta);
      const Eigen::VectorXd y1 = R.transpose().solve(dbeta);
      mu = R.solve(y0);
      q = R.solve(y1);
      const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, w);
      xc -= Q * y0;
      dx = Q * y1;
    }

    if (iter >= cap) {
      capped_ = true;
      x_ = xc;
      return theta;
    }

    Event best;
    for (Eigen::Index i = 0; i < w; ++i) {
      const auto& a = active_[static_cast<std::size_t>(i)];
      if (a.side * q[i] > kRateTolerance) {
        Event e{theta + std::max(0.0, mu[i] / q[i]), 0, a.row, a.side, static_cast<std::size_t>(i)};
        if (e.before(best)) best = e;
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      const double v = B.row(j).dot(xc);
      const double dv = B.row(j).dot(dx);
      if (std::isfinite(lo1[j])) {
        const double rate = dv - (lo1[j] - lo0[j]);
        if (rate < -kRateTolerance) {
          const double slack = v - (lo0[j] + theta * (lo1[j] - lo0[j]));
          Event e{theta + std::max(0.0, -slack / rate), 1, j, -1};
          if (e.before(best)) best = e;
        }
      }
      if (std::isfinite(hi1[j])) {
        const double rate = (hi1[j] - hi0[j]) - dv;
        if (rate < -kRateTolerance) {
          const double slack = (hi0[j] + theta * (hi1[j] - hi0[j])) - v;
          Event e{theta + std::max(0.0, -slack / rate), 1, j, +1};
          if (e.before(best)) best = e;
        }
      }
    }

    if (!(best.theta < 1.0)) {
      x_ = xc + (1.0 - theta) * dx;
      return 1.0;
    }
    const double step = best.theta - theta;
    theta = best.theta;

    if (best.kind == 0) {
      is_active[static_cast<std::size_t>(best.row)] = false;
      active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(best.active_index));
      continue;
    }

    const Eigen::VectorXd b = B.row(best.row).transpose();
    bool dependent = false;
    Eigen::VectorXd alpha;
    if (w > 0) {
      alpha = BW.transpose().colPivHouseholderQr().solve(b);
      dependent = (b - BW.transpose() * alpha).norm() <= kDependenceTolerance * std::max(1.0, b.norm());
    }
    if (!dependent) {
      active_.push_back({best.row, best.side});
      is_active[static_cast<std::size_t>(best.row)] = true;
      continue;
    }

    // Shift multiplier weight onto the new row until an active row drops out.
    mu -= step * q;
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_coef = 0.0;
    Eigen::Index leave = -1;
    for (Eigen::Index i = 0; i < w; ++i) {
      const auto& a = active_[static_cast<std::size_t>(i)];
      const double coef = a.side * best.side * alpha[i];
      if (coef <= kRateTolerance) continue;
      // Among (near) ties the largest pivot keeps the swapped set well conditioned.
      const double ratio = std::max(0.0, a.side * mu[i]) / coef;
      if (leave < 0 || ratio < best_ratio - kTieTolerance ||
          (ratio <= best_ratio + kTieTolerance && coef > best_coef)) {
        best_ratio = std::min(ratio, best_ratio);
        best_coef = coef;
        leave = i;
      }
    }
    if (leave < 0) {
      x_ = xc + step * dx;
      // A stop within rounding of the end is the end: the limit set is then
      // degenerate (a single point along some direction).
      return theta > 1.0 - 1e-10 ? 1.0 : theta;
    }
    is_active[static_cast<std::size_t>(active_[static_cast<std::size_t>(leave)].row)] = false;
    active_.erase(active_.begin() + leave);
    active_.push_back({best.row, best.side});
    is_active[static_cast<std::size_t>(best.row)] = true;
  }
}

}  // namespace xmr::detail
