#include "pseudolidar/depth_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pseudolidar/error.hpp"

namespace pseudolidar {

DepthMap::DepthMap(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw ShapeError("depth map: negative dimensions");
  const auto n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  depth_.assign(n, 0.0);
  valid_.assign(n, 0);
}

DepthMap DepthMap::filled(int height, int width, double depth) {
  DepthMap map(height, width);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) map.set(u, v, depth);
  return map;
}

void DepthMap::set(int u, int v, double depth_m) {
  if (!(depth_m > 0.0) || !std::isfinite(depth_m)) {
    throw DomainError("depth map: valid depth must be positive and finite, got " +
                      std::to_string(depth_m));
  }
  const auto i = index(u, v);
  depth_[i] = depth_m;
  valid_[i] = 1;
}

void DepthMap::invalidate(int u, int v) {
  const auto i = index(u, v);
  depth_[i] = 0.0;
  valid_[i] = 0;
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

double DepthMap::occupancy() const {
  if (depth_.empty()) return 0.0;
  return static_cast<double>(valid_count()) / static_cast<double>(depth_.size());
}

}  // namespace pseudolidar
