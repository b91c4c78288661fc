#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pseudolidar {

/// Row-major H x W grid of metric depths with a validity mask.
/// Column index u, row index v.
class DepthMap {
 public:
  DepthMap() = default;
  /// All pixels start invalid.
  DepthMap(int height, int width);

  /// Fully valid map filled with `depth`.
  static DepthMap filled(int height, int width, double depth);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return depth_.size(); }
  bool empty() const { return depth_.empty(); }

  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
  /// 0 on invalid pixels.
  double at(int u, int v) const { return depth_[index(u, v)]; }

  void set(int u, int v, double depth_m);
  void invalidate(int u, int v);

  std::size_t valid_count() const;
  /// Fraction of valid pixels.
  double occupancy() const;

  std::span<const double> values() const { return depth_; }
  std::span<const std::uint8_t> mask() const { return valid_; }

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  bool operator==(const DepthMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> depth_;
  std::vector<std::uint8_t> valid_;
};

/// Projected LiDAR depth. Same container; sparsity is reported by occupancy().
using SparseDepthMap = DepthMap;

}  // namespace pseudolidar
