#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace xmr {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Raised when a relative rotation sits on the branch cut of the logarithm
/// (angle of exactly pi), where the rotation vector is not unique.
class BranchAmbiguityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

template <typename Scalar>
Eigen::Quaternion<Scalar> canonical(Eigen::Quaternion<Scalar> q) {
  q.normalize();
  // Double cover: pick w >= 0; on the w == 0 great sphere the first nonzero
  // vector component decides.
  bool flip = q.w() < Scalar(0);
  if (q.w() == Scalar(0)) {
    if (q.x() != Scalar(0)) {
      flip = q.x() < Scalar(0);
    } else if (q.y() != Scalar(0)) {
      flip = q.y() < Scalar(0);
    } else {
      flip = q.z() < Scalar(0);
    }
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace detail

/// Unit quaternion from a rotation vector (axis * angle).
template <typename Scalar>
Eigen::Quaternion<Scalar> exp_so3(const Vector3<Scalar>& rotvec) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar theta2 = rotvec.squaredNorm();
  Scalar w;
  Scalar k;  // sin(theta/2) / theta
  if (theta2 < Scalar(1e-16)) {
    w = Scalar(1) - theta2 / Scalar(8);
    k = Scalar(0.5) - theta2 / Scalar(48);
  } else {
    const Scalar theta = sqrt(theta2);
    w = cos(theta / Scalar(2));
    k = sin(theta / Scalar(2)) / theta;
  }
  Eigen::Quaternion<Scalar> q(w, k * rotvec.x(), k * rotvec.y(), k * rotvec.z());
  return detail::canonical(q);
}

/// Principal rotation vector of a unit quaternion; norm in [0, pi].
template <typename Scalar>
Vector3<Scalar> log_so3(const Eigen::Quaternion<Scalar>& q_in) {
  using std::atan2;
  const Eigen::Quaternion<Scalar> q = detail::canonical(q_in);
  const Vector3<Scalar> v = q.vec();
  const Scalar s = v.norm();
  if (s < Scalar(1e-8)) {
    // atan2(s, w) / s -> 1/w * (1 - s^2 / (3 w^2)) for small s
    const Scalar w = q.w();
    return Scalar(2) * (Scalar(1) / w - s * s / (Scalar(3) * w * w * w)) * v;
  }
  const Scalar theta = Scalar(2) * atan2(s, q.w());
  return (theta / s) * v;
}

/// Rigid transform: translation plus unit rotation (scalar-first, w >= 0).
template <typename Scalar>
class Pose {
 public:
  using Vec3 = Vector3<Scalar>;
  using Quat = Eigen::Quaternion<Scalar>;

  Pose() : translation_(Vec3::Zero()), rotation_(Quat::Identity()) {}
  Pose(const Vec3& translation, const Quat& rotation)
      : translation_(translation), rotation_(detail::canonical(rotation)) {}

  static Pose Identity() { return Pose(); }
  static Pose Translation(const Vec3& t) { return Pose(t, Quat::Identity()); }
  static Pose Rotation(const Quat& q) { return Pose(Vec3::Zero(), q); }
  static Pose FromRotationVector(const Vec3& t, const Vec3& rotvec) {
    return Pose(t, exp_so3(rotvec));
  }

  const Vec3& translation() const { return translation_; }
  const Quat& rotation() const { return rotation_; }
  Matrix3<Scalar> rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vec3 transform_point(const Vec3& p) const { return rotation_ * p + translation_; }

  template <typename Other>
  Pose<Other> cast() const {
    return Pose<Other>(translation_.template cast<Other>(), rotation_.template cast<Other>());
  }

 private:
  Vec3 translation_;
  Quat rotation_;
};

/// Frame-local increment between two poses: translation expressed in the
/// earlier frame and the rotation vector of the relative rotation.
template <typename Scalar>
struct DifferentialPose {
  Vector3<Scalar> dtranslation = Vector3<Scalar>::Zero();
  Vector3<Scalar> drotation = Vector3<Scalar>::Zero();

  static DifferentialPose Zero() { return {}; }

  Eigen::Matrix<Scalar, 6, 1> vector() const {
    Eigen::Matrix<Scalar, 6, 1> v;
    v << dtranslation, drotation;
    return v;
  }
  static DifferentialPose FromVector(const Eigen::Matrix<Scalar, 6, 1>& v) {
    return {v.template head<3>(), v.template tail<3>()};
  }
};

using Posed = Pose<double>;
using DifferentialPosed = DifferentialPose<double>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return Pose<Scalar>(a.translation() + a.rotation() * b.translation(),
                      a.rotation() * b.rotation());
}

template <typename Scalar>
Pose<Scalar> inverse(const Pose<Scalar>& p) {
  const Eigen::Quaternion<Scalar> qi = p.rotation().conjugate();
  return Pose<Scalar>(-(qi * p.translation()), qi);
}

template <typename Scalar>
Pose<Scalar> operator*(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return compose(a, b);
}

/// Relative rotation angle of `q` in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const Eigen::Quaternion<Scalar>& q) {
  using std::atan2;
  const Eigen::Quaternion<Scalar> c = detail::canonical(q);
  return Scalar(2) * atan2(c.vec().norm(), c.w());
}

/// Increment taking `earlier` to `later`, expressed in the earlier frame.
/// Throws BranchAmbiguityError when the relative rotation is a half turn.
template <typename Scalar>
DifferentialPose<Scalar> difference(const Pose<Scalar>& earlier, const Pose<Scalar>& later) {
  const Eigen::Quaternion<Scalar> qi = earlier.rotation().conjugate();
  const Eigen::Quaternion<Scalar> rel = detail::canonical(qi * later.rotation());
  if (rel.w() <= Scalar(1e-12)) {
    throw BranchAmbiguityError("difference: relative rotation of pi has no unique rotation vector");
  }
  DifferentialPose<Scalar> d;
  d.dtranslation = qi * (later.translation() - earlier.translation());
  d.drotation = log_so3(rel);
  return d;
}

template <typename Scalar>
Pose<Scalar> apply(const Pose<Scalar>& earlier, const DifferentialPose<Scalar>& d) {
  return Pose<Scalar>(earlier.translation() + earlier.rotation() * d.dtranslation,
                      earlier.rotation() * exp_so3(d.drotation));
}

/// Rotation vector equivalent to `rotvec` (same rotation) closest to `reference`.
/// Candidates are (theta + 2 pi n) * axis for integer n.
template <typename Scalar>
Vector3<Scalar> unwrap_rotation_vector(const Vector3<Scalar>& rotvec, const Vector3<Scalar>& reference) {
  using std::floor;
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  const Scalar theta = rotvec.norm();
  Vector3<Scalar> axis;
  if (theta < Scalar(1e-12)) {
    const Scalar ref_norm = reference.norm();
    if (ref_norm < std::numbers::pi_v<Scalar>) return rotvec;
    axis = reference / ref_norm;
  } else {
    axis = rotvec / theta;
  }
  const Scalar along = axis.dot(reference);
  const Scalar n0 = floor((along - theta) / two_pi + Scalar(0.5));
  Vector3<Scalar> best = rotvec;
  Scalar best_dist = (rotvec - reference).squaredNorm();
  for (int dn = -1; dn <= 1; ++dn) {
    const Scalar n = n0 + Scalar(dn);
    if (n == Scalar(0)) continue;
    const Vector3<Scalar> cand = (theta + two_pi * n) * axis;
    const Scalar dist = (cand - reference).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  return best;
}

}  // namespace xmr
