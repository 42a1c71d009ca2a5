#include "xmr/ik_reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "xmr/detail/hierarchy.hpp"

namespace xmr {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kPivotThreshold = 1e-10;

struct Rows {
  Eigen::MatrixXd G;
  Eigen::VectorXd lo, hi;
};

bool satisfies(const Rows& rows, const Eigen::VectorXd& v) {
  const Eigen::VectorXd g = rows.G * v;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (g[j] < rows.lo[j] - kFeasTol * (1.0 + std::abs(rows.lo[j]))) return false;
    if (g[j] > rows.hi[j] + kFeasTol * (1.0 + std::abs(rows.hi[j]))) return false;
  }
  return true;
}

/// Calls visit(indices, sides) for every choice of `size` rows out of m, each
/// pinned to a finite lower (-1) or upper (+1) bound, in lexicographic order.
/// Stops early when visit returns true.
bool for_each_active_set(const Rows& rows, Eigen::Index size,
                         const std::function<bool(const std::vector<Eigen::Index>&, const std::vector<int>&)>& visit) {
  const Eigen::Index m = rows.G.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  std::vector<int> side(static_cast<std::size_t>(size));
  std::function<bool(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index pos, Eigen::Index start) -> bool {
    if (pos == size) return visit(idx, side);
    for (Eigen::Index j = start; j < m; ++j) {
      idx[static_cast<std::size_t>(pos)] = j;
      for (const int s : {-1, +1}) {
        const double bound = s < 0 ? rows.lo[j] : rows.hi[j];
        if (!std::isfinite(bound)) continue;
        if (s > 0 && rows.lo[j] == rows.hi[j]) continue;
        side[static_cast<std::size_t>(pos)] = s;
        if (rec(pos + 1, j + 1)) return true;
      }
    }
    return false;
  };
  return rec(0, 0);
}

struct Vertex {
  double value;
  Eigen::VectorXd v;
};

/// Best objective value over the vertices of {E v = e, rows}, or nothing if
/// no vertex is feasible. Ties within 1e-12 go to the vertex of least weighted
/// norm sum(w_i v_i^2). With stop_at_first the first feasible vertex wins.
std::optional<Vertex> best_vertex(const Eigen::MatrixXd& E, const Eigen::VectorXd& e, const Rows& rows,
                                  const Eigen::VectorXd& objective, const Eigen::VectorXd& w, bool stop_at_first,
                                  long& count) {
  const Eigen::Index dim = rows.G.cols();
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(dim, dim);
  if (E.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-10 * std::max(1.0, sv[0])) ++rank;
    v0 = svd.matrixV().leftCols(rank) *
         (svd.matrixU().leftCols(rank).transpose() * e).cwiseQuotient(sv.head(rank));
    if ((E * v0 - e).norm() > kFeasTol * (1.0 + e.norm())) return std::nullopt;
    W = svd.matrixV().rightCols(dim - rank);
  }
  const Eigen::Index q = W.cols();
  if (q == 0) {
    ++count;
    if (!satisfies(rows, v0)) return std::nullopt;
    return Vertex{objective.dot(v0), v0};
  }
  Rows reduced{rows.G * W, rows.lo - rows.G * v0, rows.hi - rows.G * v0};
  std::optional<Vertex> best;
  for_each_active_set(reduced, q, [&](const std::vector<Eigen::Index>& idx, const std::vector<int>& side) {
    Eigen::MatrixXd A(q, q);
    Eigen::VectorXd b(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      const auto j = idx[static_cast<std::size_t>(i)];
      A.row(i) = reduced.G.row(j);
      b[i] = side[static_cast<std::size_t>(i)] < 0 ? reduced.lo[j] : reduced.hi[j];
    }
    ++count;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(kPivotThreshold);
    if (lu.rank() < q) return false;
    const Eigen::VectorXd v = v0 + W * lu.solve(b);
    if (!satisfies(rows, v)) return false;
    const double value = objective.dot(v);
    const double norm = v.cwiseAbs2().dot(w);
    if (!best || value > best->value + 1e-12 ||
        (value > best->value - 1e-12 && norm < best->v.cwiseAbs2().dot(w))) {
      best = Vertex{value, v};
    }
    return stop_at_first;
  });
  return best;
}

struct QpResult {
  Eigen::VectorXd a;
  double residual = 0.0;
};

/// min 1/2 a^T H a subject to E a = e and the rows, by active-set enumeration
/// in order of increasing size. Accepts the first KKT point.
std::optional<QpResult> min_norm_point(const Eigen::VectorXd& h, const Eigen::MatrixXd& E, const Eigen::VectorXd& e,
                                       const Rows& rows, long& count) {
  const Eigen::Index n = h.size();
  const Eigen::Index me = E.rows();
  std::optional<QpResult> found;
  for (Eigen::Index size = 0; size <= std::min(rows.G.rows(), n - me) && !found; ++size) {
    for_each_active_set(rows, size, [&](const std::vector<Eigen::Index>& idx, const std::vector<int>& side) {
      const Eigen::Index k = me + size;
      Eigen::MatrixXd A(k, n);
      Eigen::VectorXd rhs(k);
      A.topRows(me) = E;
      rhs.head(me) = e;
      for (Eigen::Index i = 0; i < size; ++i) {
        const auto j = idx[static_cast<std::size_t>(i)];
        A.row(me + i) = rows.G.row(j);
        rhs[me + i] = side[static_cast<std::size_t>(i)] < 0 ? rows.lo[j] : rows.hi[j];
      }
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
      K.topLeftCorner(n, n) = h.asDiagonal();
      K.topRightCorner(n, k) = A.transpose();
      K.bottomLeftCorner(k, n) = A;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(n + k);
      r.tail(k) = rhs;
      ++count;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
      lu.setThreshold(kPivotThreshold);
      if (lu.rank() < n + k) return false;
      const Eigen::VectorXd sol = lu.solve(r);
      const Eigen::VectorXd a = sol.head(n);
      const Eigen::VectorXd mult = -sol.tail(k);  // H a = A^T mult
      if (!satisfies(rows, a)) return false;
      double dual_violation = 0.0;
      for (Eigen::Index i = 0; i < size; ++i) {
        const auto j = idx[static_cast<std::size_t>(i)];
        if (rows.lo[j] == rows.hi[j]) continue;  // pinned row: either sign
        const double lam = mult[me + i];
        const double wrong = side[static_cast<std::size_t>(i)] < 0 ? -lam : lam;
        dual_violation = std::max(dual_violation, wrong);
      }
      if (dual_violation > 1e-9) return false;
      double primal_violation = me > 0 ? (E * a - e).cwiseAbs().maxCoeff() : 0.0;
      const Eigen::VectorXd g = rows.G * a;
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        primal_violation = std::max({primal_violation, rows.lo[j] - g[j], g[j] - rows.hi[j]});
      }
      const double stationarity = (h.cwiseProduct(a) - A.transpose() * mult).cwiseAbs().maxCoeff();
      found = QpResult{a, std::max({stationarity, primal_violation, dual_violation})};
      return true;
    });
  }
  return found;
}

struct Problem {
  std::vector<TaskSpec> tasks;
  std::vector<detail::LevelStructure> levels;
  Rows box;  // all inequality rows on a
  bool consistent = true;
};

Problem make_problem(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints, const Eigen::VectorXd& h) {
  const Eigen::Index n = h.size();
  if (n > 12) throw std::invalid_argument("reference solver is limited to 12 DOF");
  Problem pb;
  pb.tasks = detail::sorted_tasks(tasks, n);
  pb.consistent = detail::validate_constraints(constraints, n);
  pb.levels = detail::prepare_levels(pb.tasks, h);
  const auto nc = n + static_cast<Eigen::Index>(constraints.cartesian.size());
  pb.box.G.resize(nc, n);
  pb.box.lo.resize(nc);
  pb.box.hi.resize(nc);
  pb.box.G.topRows(n).setIdentity();
  pb.box.lo.head(n) = constraints.lower;
  pb.box.hi.head(n) = constraints.upper;
  for (std::size_t i = 0; i < constraints.cartesian.size(); ++i) {
    const auto r = n + static_cast<Eigen::Index>(i);
    pb.box.G.row(r) = constraints.cartesian[i].row;
    pb.box.lo[r] = constraints.cartesian[i].lower;
    pb.box.hi[r] = constraints.cartesian[i].upper;
  }
  return pb;
}

/// Task rows of a level expressed on a: R = T N^T H.
Eigen::MatrixXd task_rows(const detail::LevelStructure& L, const Eigen::VectorXd& h) {
  return L.T * L.N.transpose() * h.asDiagonal();
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), std::max(top.cols(), bottom.cols()));
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  if (bottom.rows() > 0) out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Eigen::VectorXd stack(const Eigen::VectorXd& top, const Eigen::VectorXd& bottom) {
  Eigen::VectorXd out(top.size() + bottom.size());
  out << top, bottom;
  return out;
}

}  // namespace

IkSolution solve_reference_qp(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                              const Eigen::VectorXd& h, ReferenceDiagnostics* diagnostics) {
  const Eigen::Index n = h.size();
  const Problem pb = make_problem(tasks, constraints, h);
  IkSolution sol;
  sol.a = Eigen::VectorXd::Zero(n);
  ReferenceDiagnostics diag;
  if (!pb.consistent) {
    sol.scales.assign(pb.tasks.size(), 0.0);
    sol.status = IkStatus::Infeasible;
    if (diagnostics) *diagnostics = diag;
    return sol;
  }

  Eigen::MatrixXd E_prior(0, n);
  Eigen::VectorXd e_prior(0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  const std::size_t count = std::max<std::size_t>(pb.levels.size(), 1);
  for (std::size_t li = 0; li < count; ++li) {
    Eigen::MatrixXd R(0, n);
    Eigen::VectorXd t(0);
    bool scalable = false;
    if (li < pb.levels.size()) {
      R = task_rows(pb.levels[li], h);
      t = detail::level_targets(pb.levels[li], pb.tasks[li], a);
      scalable = pb.levels[li].scalable && R.rows() > 0;
    }

    double c_star = 1.0;
    std::optional<Vertex> best;
    if (scalable) {
      // Variables (a, c): maximize c.
      Eigen::MatrixXd Ev = Eigen::MatrixXd::Zero(E_prior.rows() + R.rows(), n + 1);
      Ev.topLeftCorner(E_prior.rows(), n) = E_prior;
      Ev.bottomLeftCorner(R.rows(), n) = R;
      Ev.bottomRightCorner(R.rows(), 1) = -t;
      const Eigen::VectorXd ev = stack(e_prior, Eigen::VectorXd(R * a));
      Rows rows;
      rows.G = Eigen::MatrixXd::Zero(pb.box.G.rows() + 1, n + 1);
      rows.G.topLeftCorner(pb.box.G.rows(), n) = pb.box.G;
      rows.G(pb.box.G.rows(), n) = 1.0;
      rows.lo = stack(pb.box.lo, Eigen::VectorXd::Constant(1, 0.0));
      rows.hi = stack(pb.box.hi, Eigen::VectorXd::Constant(1, 1.0));
      best = best_vertex(Ev, ev, rows, Eigen::VectorXd::Unit(n + 1, n), stack(h, Eigen::VectorXd::Zero(1)), false,
                         diag.systems_solved);
      c_star = best ? std::clamp(best->value, 0.0, 1.0) : -1.0;
    }

    Eigen::VectorXd e_level;
    std::optional<QpResult> qp;
    if (c_star >= 0.0) {
      // Over (a, c) with c pinned to [c*, 1]: at a degenerate maximizer the
      // vertex system that produced c* is one of the candidate active sets.
      // The scale variable is c |t| so its column is as large as those of a.
      const double ts = std::max(1.0, t.size() > 0 ? t.norm() : 0.0);
      Eigen::MatrixXd Ev = Eigen::MatrixXd::Zero(E_prior.rows() + R.rows(), n + 1);
      Ev.topLeftCorner(E_prior.rows(), n) = E_prior;
      Ev.bottomLeftCorner(R.rows(), n) = R;
      Ev.bottomRightCorner(R.rows(), 1) = -t / ts;
      Rows rows;
      rows.G = Eigen::MatrixXd::Zero(pb.box.G.rows() + 1, n + 1);
      rows.G.topLeftCorner(pb.box.G.rows(), n) = pb.box.G;
      rows.G(pb.box.G.rows(), n) = 1.0;
      rows.lo = stack(pb.box.lo, Eigen::VectorXd::Constant(1, c_star * ts));
      rows.hi = stack(pb.box.hi, Eigen::VectorXd::Constant(1, scalable ? ts : c_star * ts));
      const Eigen::VectorXd hv = stack(h, Eigen::VectorXd::Zero(1));
      qp = min_norm_point(hv, Ev, stack(e_prior, Eigen::VectorXd(R * a)), rows, diag.systems_solved);
      if (!qp && best) {
        // The maximizing face is a single point up to rounding: take the vertex.
        qp = QpResult{best->v, 0.0};
      }
      if (qp) {
        qp->a.conservativeResize(n);
        e_level = R * qp->a;
      }
    }
    if (!qp && li == 0) {
      // No scale holds the first task: least H-norm feasible a, task frozen there.
      qp = min_norm_point(h, Eigen::MatrixXd(0, n), Eigen::VectorXd(0), pb.box, diag.systems_solved);
      c_star = 0.0;
      if (qp) e_level = R * qp->a;
    }
    if (!qp) {
      sol.status = IkStatus::Infeasible;
      break;
    }
    const Eigen::MatrixXd E = stack(E_prior, R);
    const Eigen::VectorXd e = stack(e_prior, e_level);
    diag.kkt_residual = std::max(diag.kkt_residual, qp->residual);
    a = qp->a;
    if (li < pb.levels.size()) sol.scales.push_back(c_star);
    E_prior = E;
    e_prior = e;
  }

  sol.a = a;
  detail::finalize_solution(sol, constraints, pb.tasks.size());
  if (diagnostics) *diagnostics = diag;
  return sol;
}

bool reference_scale_feasible(const std::vector<TaskSpec>& tasks, const ConstraintSet& constraints,
                              const Eigen::VectorXd& h, double c1) {
  const Eigen::Index n = h.size();
  const Problem pb = make_problem(tasks, constraints, h);
  if (!pb.consistent) return false;
  Eigen::MatrixXd R(0, n);
  Eigen::VectorXd t(0);
  if (!pb.levels.empty()) {
    R = task_rows(pb.levels.front(), h);
    t = detail::level_targets(pb.levels.front(), pb.tasks.front(), Eigen::VectorXd::Zero(n));
  }
  long count = 0;
  return best_vertex(R, Eigen::VectorXd(c1 * t), pb.box, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), true, count)
      .has_value();
}

}  // namespace xmr
