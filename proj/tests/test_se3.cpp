#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "xmr/se3.hpp"
#include "xmr/trajectory.hpp"

namespace xmr {
namespace {

TEST(Se3, ExpLogRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    Eigen::Vector3d r = test::random_vector(rng, 1.7);
    EXPECT_LT((log_so3<double>(exp_so3<double>(r)) - r).norm(), 1e-12);
  }
  const Eigen::Vector3d tiny(1e-10, -2e-10, 3e-11);
  EXPECT_LT((log_so3<double>(exp_so3<double>(tiny)) - tiny).norm(), 1e-22);
}

TEST(Se3, ExpMatchesAngleAxis) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d r = test::random_vector(rng, 2.0);
    const Eigen::Matrix3d expected = Eigen::AngleAxisd(r.norm(), r.normalized()).toRotationMatrix();
    EXPECT_LT((exp_so3<double>(r).toRotationMatrix() - expected).norm(), 1e-13);
  }
}

TEST(Se3, CanonicalSign) {
  const Posed p(Eigen::Vector3d::Zero(), Eigen::Quaterniond(-0.5, 0.5, 0.5, 0.5));
  EXPECT_GT(p.rotation().w(), 0.0);
  const Posed half(Eigen::Vector3d::Zero(), Eigen::Quaterniond(0, -1, 0, 0));
  EXPECT_EQ(half.rotation().x(), 1.0);
}

TEST(Se3, ComposeMatchesMatrices) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Posed a = test::random_pose(rng);
    const Posed b = test::random_pose(rng);
    EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-13);
    EXPECT_LT(((a * inverse(a)).matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-13);
  }
}

TEST(Se3, DifferenceApplyRoundTrip) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Posed a = test::random_pose(rng);
    const Posed b = a * Posed::FromRotationVector(test::random_vector(rng), test::random_vector(rng, 1.5));
    const DifferentialPosed d = difference(a, b);
    EXPECT_LT((apply(a, d).matrix() - b.matrix()).norm(), 1e-12);
  }
}

TEST(Se3, DifferenceIsFrameLocal) {
  std::mt19937_64 rng(5);
  const Posed a = test::random_pose(rng);
  const Posed b = test::random_pose(rng);
  const Posed g = test::random_pose(rng);
  const DifferentialPosed d1 = difference(a, b);
  const DifferentialPosed d2 = difference(g * a, g * b);
  EXPECT_LT((d1.vector() - d2.vector()).norm(), 1e-12);
}

TEST(Se3, HalfTurnIsAmbiguous) {
  const Posed a;
  const Posed b = Posed::Rotation(Eigen::Quaterniond(0, 0, 0, 1));
  EXPECT_THROW(difference(a, b), BranchAmbiguityError);
}

TEST(Se3, UnwrapKeepsRotationAndContinuity) {
  const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, -1).normalized();
  const Eigen::Vector3d reference = 3.1 * axis;
  const Eigen::Vector3d wrapped = log_so3<double>(exp_so3<double>(Eigen::Vector3d(3.3 * axis)));
  EXPECT_LT(wrapped.norm(), std::numbers::pi);
  const Eigen::Vector3d unwrapped = unwrap_rotation_vector<double>(wrapped, reference);
  EXPECT_LT((unwrapped - 3.3 * axis).norm(), 1e-12);
  EXPECT_LT(exp_so3<double>(unwrapped).angularDistance(exp_so3<double>(wrapped)), 1e-12);
}

TEST(Trajectory, RejectsNonMonotonicTime) {
  std::vector<GripperSample> s(2);
  s[0].t = 1.0;
  s[1].t = 1.0;
  EXPECT_THROW(GripperTrajectory{s}, std::invalid_argument);
}

TEST(Trajectory, JsonlRoundTrip) {
  std::mt19937_64 rng(6);
  std::vector<GripperSample> samples;
  for (int i = 0; i < 5; ++i) samples.push_back({0.1 * i, test::random_pose(rng), i % 2 == 0});
  std::stringstream ss;
  write_trajectory_jsonl(ss, GripperTrajectory(samples));
  const GripperTrajectory back = read_trajectory_jsonl(ss);
  ASSERT_EQ(back.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back[i].t, samples[i].t);
    EXPECT_EQ(back[i].grasp, samples[i].grasp);
    EXPECT_EQ(back[i].pose.translation(), samples[i].pose.translation());
    EXPECT_EQ(back[i].pose.rotation().coeffs(), samples[i].pose.rotation().coeffs());
  }
}

TEST(Trajectory, MalformedLineIsNamed) {
  std::stringstream ss;
  ss << R"({"t": 0, "p": [0,0,0], "q": [1,0,0,0]})" << "\n";
  ss << R"({"t": 1, "p": [0,0], "q": [1,0,0,0]})" << "\n";
  try {
    read_trajectory_jsonl(ss);
    FAIL() << "expected a parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace xmr
