#include "pseudolidar/pseudo_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "pseudolidar/error.hpp"
#include "pseudolidar/geometry.hpp"

namespace pseudolidar {

PointCloud PseudoCloud::to_point_cloud() const {
  PointCloud out;
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(p.point);
  return out;
}

PseudoCloud depth_to_cloud(const DepthMap& depth, const CalibSet& calib) {
  const Intrinsics& k = calib.intrinsics(Side::kLeft);
  k.validate();
  const RigidTransform& extrinsic = calib.extrinsic(Side::kLeft);
  PseudoCloud cloud;
  cloud.points.reserve(depth.valid_count());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const Point3 cam = backproject({static_cast<double>(u), static_cast<double>(v), depth.at(u, v)}, k);
      const Point3 lidar = cam_to_lidar(cam, extrinsic);
      cloud.points.push_back({{lidar.x(), lidar.y(), lidar.z(), 0.0}, u, v});
    }
  }
  return cloud;
}

PseudoCloud postprocess(const PseudoCloud& cloud, double height_ceiling) {
  PseudoCloud out;
  for (const auto& p : cloud.points) {
    if (p.point.z > height_ceiling) continue;
    PseudoPoint q = p;
    q.point.reflectance = 1.0;
    out.points.push_back(q);
  }
  return out;
}

int azimuth_cell(const Point3& p, int azimuth_cells) {
  const double az = std::atan2(p.y(), p.x());  // [-pi, pi]
  const double t = (az + std::numbers::pi) / (2.0 * std::numbers::pi) * azimuth_cells;
  const int cell = static_cast<int>(std::floor(t));
  return std::clamp(cell, 0, azimuth_cells - 1);
}

PseudoCloud subsample_to_beams(const PseudoCloud& cloud, const BeamConfig& cfg, int azimuth_cells) {
  cfg.validate();
  if (azimuth_cells < 1) throw InvariantError("subsample_to_beams: azimuth_cells must be positive");

  // (bin, cell) -> index of the current nearest point
  std::unordered_map<long long, std::size_t> winner;
  std::vector<double> range(cloud.size(), 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 p = cloud.points[i].point.position();
    if (p.x() == 0.0 && p.y() == 0.0) continue;
    const int bin = cfg.bin_of(elevation_angle(p));
    if (!cfg.keeps(bin)) continue;
    range[i] = p.norm();
    const long long key = static_cast<long long>(bin) * azimuth_cells + azimuth_cell(p, azimuth_cells);
    auto [it, inserted] = winner.try_emplace(key, i);
    if (!inserted && range[i] < range[it->second]) it->second = i;
  }
  std::vector<char> keep(cloud.size(), 0);
  for (const auto& [key, index] : winner) keep[index] = 1;
  PseudoCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (keep[i]) out.points.push_back(cloud.points[i]);
  }
  return out;
}

}  // namespace pseudolidar
