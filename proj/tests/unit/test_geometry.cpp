#include <gtest/gtest.h>

#include <cmath>

#include "pseudolidar/error.hpp"
#include "pseudolidar/geometry.hpp"
#include "test_support.hpp"

namespace pseudolidar {
namespace {

using testing::geometry_round_trips;

TEST(Geometry, RoundTripsAreIdentities) {
  const auto r = geometry_round_trips(1, 10000);
  EXPECT_LE(r.max_project_error, 1e-9);
  EXPECT_LE(r.max_frame_error, 1e-9);
  EXPECT_LE(r.max_disparity_error, 1e-9);
}

TEST(Geometry, BackprojectPrincipalPointLiesOnAxis) {
  const Intrinsics k{700.0, 710.0, 600.0, 180.0};
  const Point3 p = backproject({600.0, 180.0, 12.5}, k);
  EXPECT_DOUBLE_EQ(p.x(), 0.0);
  EXPECT_DOUBLE_EQ(p.y(), 0.0);
  EXPECT_DOUBLE_EQ(p.z(), 12.5);
}

TEST(Geometry, BackprojectHandComputed) {
  const Intrinsics k{100.0, 200.0, 50.0, 20.0};
  // x = (u - cu) z / fu, y = (v - cv) z / fv
  const Point3 p = backproject({150.0, 60.0, 4.0}, k);
  EXPECT_DOUBLE_EQ(p.x(), 4.0);
  EXPECT_DOUBLE_EQ(p.y(), 0.8);
}

TEST(Geometry, NonPositiveDepthRejected) {
  const Intrinsics k{100.0, 100.0, 50.0, 50.0};
  EXPECT_THROW(backproject({1.0, 1.0, 0.0}, k), DomainError);
  EXPECT_THROW(backproject({1.0, 1.0, -2.0}, k), DomainError);
  EXPECT_THROW(project(Point3(0.0, 0.0, -1.0), k), DomainError);
}

TEST(Geometry, DisparityDepthHandComputed) {
  // KITTI-like rig: f = 721.5377, b = 0.54
  EXPECT_NEAR(depth_from_disparity(38.96, 721.5377, 0.54), 10.0, 1e-3);
  EXPECT_DOUBLE_EQ(disparity_from_depth(10.0, 100.0, 0.5), 5.0);
  EXPECT_THROW(depth_from_disparity(0.0, 100.0, 0.5), DomainError);
  EXPECT_THROW(disparity_from_depth(10.0, 100.0, 0.0), DomainError);
}

TEST(Geometry, RigidTransformRejectsNonRotation) {
  Eigen::Matrix3d scaled = Eigen::Matrix3d::Identity() * 1.1;
  EXPECT_THROW(RigidTransform(scaled, Eigen::Vector3d::Zero()), Error);
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_FALSE(is_rotation(reflection));
}

TEST(Geometry, ComposeAndInverse) {
  std::mt19937_64 rng(3);
  const RigidTransform a = testing::random_transform(rng);
  const RigidTransform b = testing::random_transform(rng);
  const Point3 p(1.0, -2.0, 3.0);
  EXPECT_LE((a.compose(b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
  EXPECT_LE((a.inverse().apply(a.apply(p)) - p).norm(), 1e-12);
  EXPECT_LE((cam_to_lidar(p, a) - a.inverse().apply(p)).norm(), 1e-12);
}

}  // namespace
}  // namespace pseudolidar
