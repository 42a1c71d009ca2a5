#include "xmr/kinematics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace xmr {

const char* to_string(JointKind kind) {
  switch (kind) {
    case JointKind::Revolute:
      return "revolute";
    case JointKind::Prismatic:
      return "prismatic";
    case JointKind::PlanarBase:
      return "planar";
    case JointKind::FloatingBase:
      return "floating";
    case JointKind::Fixed:
      return "fixed";
  }
  return "unknown";
}

JointKind joint_kind_from_string(const std::string& s) {
  if (s == "revolute") return JointKind::Revolute;
  if (s == "prismatic") return JointKind::Prismatic;
  if (s == "planar" || s == "planar-base") return JointKind::PlanarBase;
  if (s == "floating" || s == "floating-base") return JointKind::FloatingBase;
  if (s == "fixed") return JointKind::Fixed;
  throw std::invalid_argument("unknown joint kind: " + s);
}

RobotModel::RobotModel(std::vector<JointSpec> joints, GripperFrame gripper, std::string name)
    : name_(std::move(name)), joints_(std::move(joints)), gripper_(std::move(gripper)) {
  std::set<std::string> names;
  std::map<std::string, std::size_t> joint_of_child;
  std::set<std::string> links;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    auto& j = joints_[i];
    if (!names.insert(j.name).second) throw std::invalid_argument("duplicate joint name: " + j.name);
    if (j.parent.empty() || j.child.empty()) throw std::invalid_argument("joint " + j.name + " lacks parent/child");
    if (j.parent == j.child) throw std::invalid_argument("joint " + j.name + " connects a link to itself");
    if (!joint_of_child.emplace(j.child, i).second) {
      throw std::invalid_argument("link " + j.child + " has more than one parent joint");
    }
    links.insert(j.parent);
    links.insert(j.child);
    if (j.kind == JointKind::Revolute || j.kind == JointKind::Prismatic) {
      const double n = j.axis.norm();
      if (!(n > 1e-12)) throw std::invalid_argument("joint " + j.name + " has a zero axis");
      j.axis /= n;
    }
    const auto ndof = static_cast<std::size_t>(dof_count(j.kind));
    if (j.limits.size() == 1 && ndof > 1) j.limits.resize(ndof, j.limits.front());
    if (j.limits.size() != ndof) {
      throw std::invalid_argument("joint " + j.name + " needs " + std::to_string(ndof) + " limit entries");
    }
    for (std::size_t d = 0; d < ndof; ++d) {
      auto& lim = j.limits[d];
      const bool rotvec = j.kind == JointKind::FloatingBase && d >= 3;
      if (rotvec) {
        // Rotation-vector coordinates carry no position limits.
        lim.q_min = -std::numeric_limits<double>::infinity();
        lim.q_max = std::numeric_limits<double>::infinity();
      }
      if (!(lim.q_min < lim.q_max)) throw std::invalid_argument("joint " + j.name + ": q_min must be below q_max");
      if (!(lim.v_max > 0.0)) throw std::invalid_argument("joint " + j.name + ": v_max must be positive");
      if (!(lim.a_max > 0.0)) throw std::invalid_argument("joint " + j.name + ": a_max must be positive");
    }
  }

  std::vector<std::string> roots;
  for (const auto& l : links) {
    if (!joint_of_child.count(l)) roots.push_back(l);
  }
  if (joints_.empty()) {
    roots = {gripper_.link};
  }
  if (roots.size() != 1) throw std::invalid_argument("kinematic tree must have exactly one root link");
  root_ = roots.front();

  // Every link must reach the root without revisiting a link.
  for (const auto& l : links) {
    std::string cur = l;
    std::size_t steps = 0;
    while (cur != root_) {
      if (++steps > joints_.size()) throw std::invalid_argument("kinematic tree contains a cycle");
      cur = joints_[joint_of_child.at(cur)].parent;
    }
  }

  if (gripper_.link != root_ && !joint_of_child.count(gripper_.link)) {
    throw std::invalid_argument("gripper link not found: " + gripper_.link);
  }
  for (std::string cur = gripper_.link; cur != root_;) {
    const std::size_t ji = joint_of_child.at(cur);
    chain_.push_back(ji);
    cur = joints_[ji].parent;
  }
  std::reverse(chain_.begin(), chain_.end());

  offsets_.resize(joints_.size());
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    offsets_[i] = dof_;
    dof_ += dof_count(joints_[i].kind);
  }
  q_min_.resize(dof_);
  q_max_.resize(dof_);
  v_max_.resize(dof_);
  a_max_.resize(dof_);
  rotvec_dof_.assign(static_cast<std::size_t>(dof_), false);
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    for (int d = 0; d < dof_count(joints_[i].kind); ++d) {
      const auto& lim = joints_[i].limits[static_cast<std::size_t>(d)];
      const int k = offsets_[i] + d;
      q_min_[k] = lim.q_min;
      q_max_[k] = lim.q_max;
      v_max_[k] = lim.v_max;
      a_max_[k] = lim.a_max;
      rotvec_dof_[static_cast<std::size_t>(k)] = joints_[i].kind == JointKind::FloatingBase && d >= 3;
    }
  }
}

RobotModel RobotModel::with_velocity_scale(double factor) const {
  std::vector<JointSpec> joints = joints_;
  for (auto& j : joints) {
    for (auto& lim : j.limits) lim.v_max *= factor;
  }
  return RobotModel(std::move(joints), gripper_, name_);
}

Posed joint_transform(const JointSpec& joint, const Eigen::Ref<const Eigen::VectorXd>& q) {
  switch (joint.kind) {
    case JointKind::Revolute:
      return joint.origin * Posed::Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(q[0], joint.axis)));
    case JointKind::Prismatic:
      return joint.origin * Posed::Translation(q[0] * joint.axis);
    case JointKind::PlanarBase:
      return joint.origin * Posed(Eigen::Vector3d(q[0], q[1], 0.0),
                                  Eigen::Quaterniond(Eigen::AngleAxisd(q[2], Eigen::Vector3d::UnitZ())));
    case JointKind::FloatingBase:
      return joint.origin * Posed::FromRotationVector(q.head<3>(), q.segment<3>(3));
    case JointKind::Fixed:
      return joint.origin;
  }
  return joint.origin;
}

namespace {

void check_dimension(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) {
    throw std::invalid_argument("configuration has " + std::to_string(q.size()) + " entries, model has " +
                                std::to_string(model.dof()) + " DOF");
  }
}

}  // namespace

Posed forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
  check_dimension(model, q);
  Posed pose;
  for (const std::size_t ji : model.gripper_chain()) {
    const auto& j = model.joints()[ji];
    pose = pose * joint_transform(j, q.segment(model.dof_offset(ji), dof_count(j.kind)));
  }
  return pose * model.gripper().offset;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& model, const Eigen::VectorXd& q) {
  check_dimension(model, q);
  const auto& chain = model.gripper_chain();
  std::vector<Posed> origin_world(chain.size());
  Posed pose;
  for (std::size_t c = 0; c < chain.size(); ++c) {
    const auto& j = model.joints()[chain[c]];
    origin_world[c] = pose * j.origin;
    pose = pose * joint_transform(j, q.segment(model.dof_offset(chain[c]), dof_count(j.kind)));
  }
  const Eigen::Vector3d p_grip = (pose * model.gripper().offset).translation();

  Eigen::Matrix<double, 6, Eigen::Dynamic> J = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, model.dof());
  auto linear = [&](int col, const Eigen::Vector3d& dir) { J.col(col).head<3>() = dir; };
  auto angular = [&](int col, const Eigen::Vector3d& axis, const Eigen::Vector3d& point) {
    J.col(col).head<3>() = axis.cross(p_grip - point);
    J.col(col).tail<3>() = axis;
  };
  for (std::size_t c = 0; c < chain.size(); ++c) {
    const auto& j = model.joints()[chain[c]];
    const int off = model.dof_offset(chain[c]);
    const Posed& ow = origin_world[c];
    const Eigen::Matrix3d R = ow.rotation_matrix();
    switch (j.kind) {
      case JointKind::Revolute:
        angular(off, R * j.axis, ow.translation());
        break;
      case JointKind::Prismatic:
        linear(off, R * j.axis);
        break;
      case JointKind::PlanarBase: {
        linear(off, R.col(0));
        linear(off + 1, R.col(1));
        angular(off + 2, R.col(2), ow.transform_point(Eigen::Vector3d(q[off], q[off + 1], 0.0)));
        break;
      }
      case JointKind::FloatingBase: {
        const Eigen::Vector3d point = ow.transform_point(q.segment<3>(off));
        for (int i = 0; i < 3; ++i) {
          linear(off + i, R.col(i));
          angular(off + 3 + i, R.col(i), point);
        }
        break;
      }
      case JointKind::Fixed:
        break;
    }
  }
  return J;
}

Eigen::VectorXd integrate(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& v, double dt) {
  check_dimension(model, q);
  check_dimension(model, v);
  Eigen::VectorXd out = q + dt * v;
  for (std::size_t ji = 0; ji < model.joints().size(); ++ji) {
    if (model.joints()[ji].kind != JointKind::FloatingBase) continue;
    const int off = model.dof_offset(ji) + 3;
    const Eigen::Vector3d rv = q.segment<3>(off);
    const Eigen::Quaterniond updated = exp_so3<double>(dt * v.segment<3>(off)) * exp_so3<double>(rv);
    out.segment<3>(off) = unwrap_rotation_vector<double>(log_so3<double>(updated), rv);
  }
  return out;
}

VelocityBounds velocity_bounds(const RobotModel& model, const JointState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("velocity_bounds: dt must be positive");
  check_dimension(model, state.q);
  check_dimension(model, state.qdot);
  const int n = model.dof();
  VelocityBounds b{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    const double v = model.v_max()[i];
    const double pos_lo = (model.q_min()[i] - state.q[i]) / dt;
    const double pos_hi = (model.q_max()[i] - state.q[i]) / dt;
    // Position and velocity window; never empty for a configuration inside
    // its limits because it then contains zero.
    double lo = std::max(-v, pos_lo);
    double hi = std::min(v, pos_hi);
    if (lo > hi) {
      lo = hi = (pos_hi < -v) ? -v : v;
    }
    const double acc_lo = state.qdot[i] - model.a_max()[i] * dt;
    const double acc_hi = state.qdot[i] + model.a_max()[i] * dt;
    if (acc_hi < lo) {
      hi = lo;
    } else if (acc_lo > hi) {
      lo = hi;
    } else {
      lo = std::max(lo, acc_lo);
      hi = std::min(hi, acc_hi);
    }
    b.lower[i] = lo;
    b.upper[i] = hi;
  }
  return b;
}

Eigen::VectorXd clamp_to_limits(const RobotModel& model, const Eigen::VectorXd& q) {
  check_dimension(model, q);
  return q.cwiseMax(model.q_min()).cwiseMin(model.q_max());
}

bool within_limits(const RobotModel& model, const Eigen::VectorXd& q, double tol) {
  check_dimension(model, q);
  for (int i = 0; i < model.dof(); ++i) {
    if (q[i] < model.q_min()[i] - tol || q[i] > model.q_max()[i] + tol) return false;
  }
  return true;
}

}  // namespace xmr
