#include "pseudolidar/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "pseudolidar/error.hpp"

namespace pseudolidar {

void Intrinsics::validate() const {
  if (!(fu > 0.0) || !(fv > 0.0) || !std::isfinite(fu) || !std::isfinite(fv) ||
      !std::isfinite(cu) || !std::isfinite(cv)) {
    std::ostringstream os;
    os << "invalid intrinsics: fu=" << fu << " fv=" << fv << " cu=" << cu << " cv=" << cv;
    throw InvariantError(os.str());
  }
}

bool is_rotation(const Eigen::Matrix3d& r, double tolerance) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tolerance && std::abs(r.determinant() - 1.0) <= tolerance;
}

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) {
    throw InvariantError("rigid transform: rotation is not orthonormal with det 1");
  }
  if (!translation_.allFinite()) {
    throw InvariantError("rigid transform: non-finite translation");
  }
}

RigidTransform RigidTransform::from_approximate(const Eigen::Matrix3d& rotation,
                                                const Eigen::Vector3d& translation) {
  if (!is_rotation(rotation)) {
    throw InvariantError("rigid transform: rotation is not orthonormal with det 1");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d projected = svd.matrixU() * svd.matrixV().transpose();
  return RigidTransform(projected, translation);
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(rotation_.transpose() * translation_);
  return out;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Eigen::Matrix4d RigidTransform::homogeneous() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Point3 backproject(const PixelDepth& pd, const Intrinsics& k) {
  if (!(pd.z > 0.0) || !std::isfinite(pd.z)) {
    throw DomainError("backproject: depth must be positive, got " + std::to_string(pd.z));
  }
  return {(pd.u - k.cu) * pd.z / k.fu, (pd.v - k.cv) * pd.z / k.fv, pd.z};
}

PixelDepth project(const Point3& p, const Intrinsics& k) {
  if (!(p.z() > 0.0)) {
    throw DomainError("project: point is behind the camera (z=" + std::to_string(p.z()) + ")");
  }
  return {k.fu * p.x() / p.z() + k.cu, k.fv * p.y() / p.z() + k.cv, p.z()};
}

Point3 cam_to_lidar(const Point3& p, const RigidTransform& lidar_to_camera) {
  return lidar_to_camera.apply_inverse(p);
}

Point3 lidar_to_cam(const Point3& p, const RigidTransform& lidar_to_camera) {
  return lidar_to_camera.apply(p);
}

double depth_from_disparity(double disparity_px, double fu_px, double baseline_m) {
  if (!(disparity_px > 0.0) || !(fu_px > 0.0) || !(baseline_m > 0.0)) {
    throw DomainError("depth_from_disparity: arguments must be positive");
  }
  const double depth = fu_px * baseline_m / disparity_px;
  if (!std::isfinite(depth)) throw DomainError("depth_from_disparity: disparity too close to zero");
  return depth;
}

double disparity_from_depth(double depth_m, double fu_px, double baseline_m) {
  if (!(depth_m > 0.0) || !(fu_px > 0.0) || !(baseline_m > 0.0)) {
    throw DomainError("disparity_from_depth: arguments must be positive");
  }
  const double disparity = fu_px * baseline_m / depth_m;
  if (!std::isfinite(disparity)) throw DomainError("disparity_from_depth: depth too close to zero");
  return disparity;
}

}  // namespace pseudolidar
