#pragma once

#include <Eigen/Core>

namespace pseudolidar {

using Point3 = Eigen::Vector3d;

// Camera frame: x right, y down, z forward.
// LiDAR frame:  x forward, y left, z up.

struct Intrinsics {
  double fu = 0.0;  // horizontal focal length, px
  double fv = 0.0;  // vertical focal length, px
  double cu = 0.0;  // principal point, px
  double cv = 0.0;

  /// Throws InvariantError unless both focal lengths are positive and finite.
  void validate() const;
};

/// Pixel coordinate with metric depth along the optical axis.
struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

/// Rigid motion p' = R p + t. Maps LiDAR coordinates into camera coordinates
/// when used as an extrinsic.
class RigidTransform {
 public:
  static constexpr double kOrthonormalTolerance = 1e-6;

  RigidTransform();  // identity

  /// Throws InvariantError if R is not a proper rotation within tolerance.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }

  /// Builds from a 3x3 matrix that is only approximately orthonormal by
  /// projecting it onto SO(3) (polar decomposition). The input must still be
  /// within kOrthonormalTolerance of a rotation.
  static RigidTransform from_approximate(const Eigen::Matrix3d& rotation,
                                         const Eigen::Vector3d& translation);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 apply_inverse(const Point3& p) const {
    return rotation_.transpose() * (p - translation_);
  }

  RigidTransform inverse() const;
  /// (*this) * other: apply other first.
  RigidTransform compose(const RigidTransform& other) const;
  Eigen::Matrix4d homogeneous() const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// True when R^T R = I and det R = 1 within `tolerance`.
bool is_rotation(const Eigen::Matrix3d& r, double tolerance = RigidTransform::kOrthonormalTolerance);

/// Pixel + depth to camera-frame point. Throws DomainError when z <= 0.
Point3 backproject(const PixelDepth& pd, const Intrinsics& k);

/// Camera-frame point to pixel + depth. Throws DomainError when the point is
/// not in front of the camera.
PixelDepth project(const Point3& p, const Intrinsics& k);

/// camera -> LiDAR, i.e. C^{-1} p for the LiDAR->camera extrinsic C.
Point3 cam_to_lidar(const Point3& p, const RigidTransform& lidar_to_camera);
/// LiDAR -> camera.
Point3 lidar_to_cam(const Point3& p, const RigidTransform& lidar_to_camera);

/// D = f_U * b / d. Throws DomainError for non-positive arguments.
double depth_from_disparity(double disparity_px, double fu_px, double baseline_m);
/// d = f_U * b / D. Throws DomainError for non-positive arguments.
double disparity_from_depth(double depth_m, double fu_px, double baseline_m);

}  // namespace pseudolidar
