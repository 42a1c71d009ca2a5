#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "xmr/se3.hpp"
#include "xmr/trajectory.hpp"

namespace xmr {

inline constexpr int kDhbChannels = 10;

inline constexpr std::array<const char*, kDhbChannels> kDhbChannelNames = {
    "m_p", "sin_theta1_p", "sin_2theta1_p", "sin_theta2_p", "sin_2theta2_p",
    "m_r", "sin_theta1_r", "sin_2theta1_r", "sin_theta2_r", "sin_2theta2_r"};

/// Below this step norm a linear or angular increment has no direction.
inline constexpr double kDhbEpsilon = 1e-8;

/// 10 x (T-2) motion-invariant descriptor of a window of T poses. Rows follow
/// kDhbChannelNames; column k describes the step pair (k, k+1).
template <typename Scalar>
struct DhbInvariants {
  Eigen::Matrix<Scalar, kDhbChannels, Eigen::Dynamic> channels;

  Eigen::Index columns() const { return channels.cols(); }
};

using DhbInvariantsd = DhbInvariants<double>;

namespace dhb_detail {

template <typename Scalar>
Vector3<Scalar> least_aligned_axis(const Vector3<Scalar>& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) < std::abs(v[best])) best = i;
  }
  return Vector3<Scalar>::Unit(best);
}

template <typename Scalar>
Vector3<Scalar> dominant_axis(const Vector3<Scalar>& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  return v[best] < Scalar(0) ? Vector3<Scalar>(-Vector3<Scalar>::Unit(best))
                             : Vector3<Scalar>(Vector3<Scalar>::Unit(best));
}

/// Writes the five rows (m, sin t1, sin 2t1, sin t2, sin 2t2) for one stream of
/// increments d_0..d_{M-1}; produces M-1 columns.
///
/// Degenerate increments (norm below kDhbEpsilon) carry the previous x-frame
/// forward, and every angle touching such an increment is zero. Collinear
/// consecutive directions carry the previous y-frame. A y-frame derived from
/// geometry is "anchored"; placeholder frames built from world axes are not,
/// and angles between unanchored frames are zero so the output never depends
/// on the world frame.
template <typename Scalar, typename Block>
void encode_stream(const std::vector<Vector3<Scalar>>& deltas, Block&& rows) {
  using Vec3 = Vector3<Scalar>;
  using std::atan2;
  using std::sin;
  const auto eps = Scalar(kDhbEpsilon);
  const std::size_t M = deltas.size();
  const std::size_t K = M - 1;

  std::vector<Scalar> norms(M);
  std::vector<bool> valid(M);
  std::optional<std::size_t> first_valid;
  for (std::size_t k = 0; k < M; ++k) {
    norms[k] = deltas[k].norm();
    valid[k] = norms[k] >= eps;
    if (valid[k] && !first_valid) first_valid = k;
  }

  std::vector<Vec3> x(M);
  {
    const Vec3 seed = first_valid ? dominant_axis<Scalar>(deltas[*first_valid]) : Vec3(Vec3::UnitX());
    std::optional<Vec3> prev;
    for (std::size_t k = 0; k < M; ++k) {
      if (valid[k]) {
        x[k] = deltas[k] / norms[k];
      } else {
        x[k] = prev ? *prev : seed;
      }
      prev = x[k];
    }
  }

  std::vector<Vec3> y(K);
  std::vector<bool> anchored(K, false);
  {
    std::optional<Vec3> last_anchored;
    for (std::size_t k = 0; k < K; ++k) {
      bool computed = false;
      if (valid[k] && valid[k + 1]) {
        const Vec3 c = x[k].cross(x[k + 1]);
        const Scalar cn = c.norm();
        if (cn >= eps) {
          y[k] = c / cn;
          if (last_anchored && y[k].dot(*last_anchored) < Scalar(0)) y[k] = -y[k];
          anchored[k] = true;
          last_anchored = y[k];
          computed = true;
        }
      }
      if (!computed) {
        if (k > 0) {
          y[k] = y[k - 1];
          anchored[k] = anchored[k - 1];
        } else {
          y[k] = x[k].cross(least_aligned_axis<Scalar>(x[k])).normalized();
        }
      }
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    Scalar theta1(0);
    Scalar theta2(0);
    if (valid[k] && valid[k + 1]) {
      theta1 = atan2(x[k].cross(x[k + 1]).dot(y[k]), x[k].dot(x[k + 1]));
      if (k + 1 < K && anchored[k] && anchored[k + 1]) {
        theta2 = atan2(y[k].cross(y[k + 1]).dot(x[k + 1]), y[k].dot(y[k + 1]));
      }
    }
    const auto col = static_cast<Eigen::Index>(k);
    rows(0, col) = norms[k];
    rows(1, col) = sin(theta1);
    rows(2, col) = sin(Scalar(2) * theta1);
    rows(3, col) = sin(theta2);
    rows(4, col) = sin(Scalar(2) * theta2);
  }
}

}  // namespace dhb_detail

/// Motion-invariant transform of a pose window (T >= 3 poses).
template <typename Scalar>
DhbInvariants<Scalar> dhb_transform(std::span<const Pose<Scalar>> window) {
  if (window.size() < 3) throw std::invalid_argument("dhb_transform: window needs at least 3 poses");
  const RelativeMotion<Scalar> rel = relative_positions_orientations<Scalar>(window);
  const std::size_t M = window.size() - 1;
  std::vector<Vector3<Scalar>> dp(M);
  std::vector<Vector3<Scalar>> dr(M);
  for (std::size_t k = 0; k < M; ++k) {
    dp[k] = rel.positions[k + 1] - rel.positions[k];
    dr[k] = rel.orientations[k + 1] - rel.orientations[k];
  }
  DhbInvariants<Scalar> out;
  out.channels.resize(kDhbChannels, static_cast<Eigen::Index>(M - 1));
  dhb_detail::encode_stream<Scalar>(dp, out.channels.template topRows<5>());
  dhb_detail::encode_stream<Scalar>(dr, out.channels.template bottomRows<5>());
  return out;
}

template <typename Scalar>
DhbInvariants<Scalar> dhb_transform(const std::vector<Pose<Scalar>>& window) {
  return dhb_transform<Scalar>(std::span<const Pose<Scalar>>(window));
}

/// History window extended by the poses reached through `steps`.
template <typename Scalar>
std::vector<Pose<Scalar>> extend_window(std::span<const Pose<Scalar>> history,
                                        std::span<const DifferentialPose<Scalar>> steps) {
  if (history.empty()) throw std::invalid_argument("extend_window: empty history");
  std::vector<Pose<Scalar>> out(history.begin(), history.end());
  out.reserve(history.size() + steps.size());
  for (const auto& d : steps) out.push_back(apply(out.back(), d));
  return out;
}

/// Transform of the history with one predicted step appended.
template <typename Scalar>
DhbInvariants<Scalar> dhb_transform_with_prediction(std::span<const Pose<Scalar>> history,
                                                    const DifferentialPose<Scalar>& predicted) {
  if (history.size() < 3) {
    throw std::invalid_argument("dhb_transform_with_prediction: history needs at least 3 poses");
  }
  const auto extended = extend_window<Scalar>(history, std::span<const DifferentialPose<Scalar>>(&predicted, 1));
  return dhb_transform<Scalar>(std::span<const Pose<Scalar>>(extended));
}

/// Sum of squared channel-wise differences.
template <typename Scalar>
Scalar dhb_distance(const DhbInvariants<Scalar>& a, const DhbInvariants<Scalar>& b) {
  if (a.channels.rows() != b.channels.rows() || a.channels.cols() != b.channels.cols()) {
    throw std::invalid_argument("dhb_distance: shape mismatch");
  }
  return (a.channels - b.channels).squaredNorm();
}

/// Sum of dhb_distance over all stride-1 windows of `window` poses. Both
/// trajectories must have the same length, at least `window`.
double trajectory_invariant_distance(std::span<const Posed> a, std::span<const Posed> b, std::size_t window);

/// CSV with the channel names as header and one row per column.
void write_invariants_csv(std::ostream& out, const DhbInvariantsd& inv);

/// Every stride-1 window of `window` poses, one block per window. Columns are
/// the window start index, the column within the window and the channels.
void write_sliding_invariants_csv(std::ostream& out, std::span<const Posed> poses, std::size_t window);

}  // namespace xmr
