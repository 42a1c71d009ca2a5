#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xmr/se3.hpp"

namespace xmr {

struct GripperSample {
  double t = 0.0;
  Posed pose;
  bool grasp = false;
};

/// Timestamped gripper poses with binary grasp states. Timestamps strictly
/// increase and the trajectory is never empty.
class GripperTrajectory {
 public:
  explicit GripperTrajectory(std::vector<GripperSample> samples);

  std::size_t size() const { return samples_.size(); }
  const GripperSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<GripperSample>& samples() const { return samples_; }
  std::vector<Posed> poses() const;

  double duration() const { return samples_.back().t - samples_.front().t; }

 private:
  std::vector<GripperSample> samples_;
};

/// One JSON object per line: {"t": s, "p": [x,y,z], "q": [w,x,y,z], "grasp": 0|1}.
/// Parse failures throw std::runtime_error naming the 1-based line number.
GripperTrajectory read_trajectory_jsonl(std::istream& in);
GripperTrajectory read_trajectory_jsonl(const std::string& path);
void write_trajectory_jsonl(std::ostream& out, const GripperTrajectory& traj);

template <typename Scalar>
struct RelativeMotion {
  std::vector<Vector3<Scalar>> positions;     // p_k in the first frame of the window
  std::vector<Vector3<Scalar>> orientations;  // r_k, continuous rotation vectors
};

/// Positions and unwrapped rotation vectors of each pose relative to the
/// first pose of the window.
template <typename Scalar>
RelativeMotion<Scalar> relative_positions_orientations(std::span<const Pose<Scalar>> window) {
  if (window.size() < 3) {
    throw std::invalid_argument("relative_positions_orientations: window needs at least 3 poses");
  }
  RelativeMotion<Scalar> out;
  out.positions.reserve(window.size());
  out.orientations.reserve(window.size());
  const Pose<Scalar>& origin = window.front();
  const Eigen::Quaternion<Scalar> qi = origin.rotation().conjugate();
  Vector3<Scalar> previous = Vector3<Scalar>::Zero();
  for (std::size_t k = 0; k < window.size(); ++k) {
    if (k == 0) {
      out.positions.push_back(Vector3<Scalar>::Zero());
      out.orientations.push_back(Vector3<Scalar>::Zero());
      continue;
    }
    out.positions.push_back(qi * (window[k].translation() - origin.translation()));
    const Vector3<Scalar> r = log_so3<Scalar>(qi * window[k].rotation());
    previous = unwrap_rotation_vector<Scalar>(r, previous);
    out.orientations.push_back(previous);
  }
  return out;
}

inline RelativeMotion<double> relative_positions_orientations(const GripperTrajectory& traj,
                                                              std::size_t start, std::size_t length) {
  if (length < 3) {
    throw std::invalid_argument("relative_positions_orientations: window needs at least 3 poses");
  }
  if (start + length > traj.size()) {
    throw std::out_of_range("relative_positions_orientations: window exceeds trajectory");
  }
  std::vector<Posed> window;
  window.reserve(length);
  for (std::size_t k = start; k < start + length; ++k) window.push_back(traj[k].pose);
  return relative_positions_orientations<double>(std::span<const Posed>(window));
}

}  // namespace xmr
