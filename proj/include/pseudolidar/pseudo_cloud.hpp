#pragma once

#include <vector>

#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/lidar_ops.hpp"
#include "pseudolidar/point_cloud.hpp"

namespace pseudolidar {

struct PseudoPoint {
  LidarPoint point;  // LiDAR frame
  int u = 0;         // source pixel
  int v = 0;

  bool operator==(const PseudoPoint&) const = default;
};

struct PseudoCloud {
  std::vector<PseudoPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Drops provenance pixels for export.
  PointCloud to_point_cloud() const;
};

inline constexpr double kDefaultHeightCeiling = 1.0;  // m above the LiDAR origin
inline constexpr int kDefaultAzimuthCells = 2048;

/// One point per valid pixel: pinhole back-projection through the left
/// camera followed by the inverse extrinsic into the LiDAR frame. Points keep
/// reflectance 0 until postprocess().
PseudoCloud depth_to_cloud(const DepthMap& depth, const CalibSet& calib);

/// Sets every reflectance to 1 and removes points with z > height_ceiling
/// (LiDAR frame, z up). Order preserved.
PseudoCloud postprocess(const PseudoCloud& cloud, double height_ceiling = kDefaultHeightCeiling);

/// Decimates to a LiDAR-like line pattern: within each kept elevation bin,
/// at most one point per uniform azimuth cell survives (the nearest; ties go
/// to the earlier point). Output is an order-preserving subset.
PseudoCloud subsample_to_beams(const PseudoCloud& cloud, const BeamConfig& cfg,
                               int azimuth_cells = kDefaultAzimuthCells);

/// Azimuth cell of a LiDAR-frame point: floor((atan2(y, x) + pi) / 2pi * cells).
int azimuth_cell(const Point3& p, int azimuth_cells);

}  // namespace pseudolidar
