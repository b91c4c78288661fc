#pragma once

#include <cstddef>
#include <vector>

#include "pseudolidar/geometry.hpp"

namespace pseudolidar {

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double reflectance = 0.0;

  Point3 position() const { return {x, y, z}; }
  bool operator==(const LidarPoint&) const = default;
};

/// Points in the LiDAR frame, file order preserved.
struct PointCloud {
  std::vector<LidarPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool operator==(const PointCloud&) const = default;
};

/// A raw sensor sweep (64-beam or sparsified).
using RawScan = PointCloud;

}  // namespace pseudolidar
