#pragma once

// Readers and writers for the KITTI object / depth-completion file formats:
//   velodyne .bin   float32 little-endian (x, y, z, reflectance) per point
//   calib .txt      "KEY: v0 v1 ..." lines (P2, P3, R0_rect, Tr_velo_to_cam)
//   label .txt      15 fields (ground truth) or 16 fields (detections, + score)
//   depth .pgm      P5, maxval 65535, big-endian samples, depth_m = sample / 256
//   cloud .ply      ASCII, vertex properties x y z reflectance
//   image .ppm      P6, maxval 255 (synthetic stereo images)

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/geometry.hpp"
#include "pseudolidar/point_cloud.hpp"

namespace pseudolidar {

enum class Side { kLeft, kRight };

using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

/// Stereo rig calibration. Left/right are the colour pair P2/P3; the
/// derived quantities are computed once at construction.
class CalibSet {
 public:
  CalibSet() = default;

  /// Throws InvariantError when the derived rig is invalid
  /// (f <= 0, baseline <= 0, non-rotation R0_rect or velo rotation).
  CalibSet(const ProjectionMatrix& p_left, const ProjectionMatrix& p_right,
           const Eigen::Matrix3d& r_rect, const ProjectionMatrix& velo_to_cam);

  /// Rectified rig with identical intrinsics, P_left = K[I|0] and
  /// P_right = K[I|(-b,0,0)], R0_rect = I.
  static CalibSet from_rig(const Intrinsics& k, double baseline_m,
                           const RigidTransform& lidar_to_left);

  const ProjectionMatrix& p_left() const { return p_left_; }
  const ProjectionMatrix& p_right() const { return p_right_; }
  const Eigen::Matrix3d& r_rect() const { return r_rect_; }
  const ProjectionMatrix& velo_to_cam() const { return velo_to_cam_; }

  const Intrinsics& intrinsics(Side side = Side::kLeft) const {
    return side == Side::kLeft ? k_left_ : k_right_;
  }
  /// b = (P2[0,3] - P3[0,3]) / f_U.
  double baseline() const { return baseline_; }
  /// LiDAR frame -> rectified camera frame of the given side.
  const RigidTransform& extrinsic(Side side = Side::kLeft) const {
    return side == Side::kLeft ? lidar_to_left_ : lidar_to_right_;
  }

 private:
  ProjectionMatrix p_left_ = ProjectionMatrix::Zero();
  ProjectionMatrix p_right_ = ProjectionMatrix::Zero();
  Eigen::Matrix3d r_rect_ = Eigen::Matrix3d::Identity();
  ProjectionMatrix velo_to_cam_ = ProjectionMatrix::Zero();
  Intrinsics k_left_;
  Intrinsics k_right_;
  double baseline_ = 0.0;
  RigidTransform lidar_to_left_;
  RigidTransform lidar_to_right_;
};

struct LabelRecord {
  std::string type;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;  // 2D box, px
  double h = 0.0, w = 0.0, l = 0.0;               // m
  double x = 0.0, y = 0.0, z = 0.0;               // bottom centre, camera frame, m
  double rotation_y = 0.0;                        // rad
  std::optional<double> score;

  bool is_dont_care() const { return type == "DontCare"; }
  double bbox_height() const { return y2 - y1; }
  bool operator==(const LabelRecord&) const = default;
};

/// H x W x 3 intensities in [0, 1], row-major, channels interleaved.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0) {}
  double& at(int u, int v, int c) { return data[(static_cast<std::size_t>(v) * width + u) * 3 + c]; }
  double at(int u, int v, int c) const {
    return data[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  bool operator==(const RgbImage&) const = default;
};

// ---- generic file helpers ----
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, std::string_view text);

// ---- velodyne ----
RawScan decode_velodyne(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_velodyne(const PointCloud& cloud);
RawScan read_velodyne_bin(const std::filesystem::path& path);
void write_velodyne_bin(const PointCloud& cloud, const std::filesystem::path& path);

// ---- calibration ----
CalibSet parse_calib(std::string_view text);
std::string format_calib(const CalibSet& calib);
CalibSet read_calib(const std::filesystem::path& path);

// ---- labels ----
std::vector<LabelRecord> parse_labels(std::string_view text);
std::string format_labels(std::span<const LabelRecord> labels);
std::vector<LabelRecord> read_labels(const std::filesystem::path& path);

// ---- 16-bit depth images ----
inline constexpr double kDepthScale = 256.0;
/// Valid depths are quantised to round(depth * 256) clamped to [1, 65535].
std::uint16_t depth_to_sample(double depth_m);
std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& depth);
DepthMap decode_depth_pgm(std::span<const std::uint8_t> bytes);
DepthMap read_depth_image(const std::filesystem::path& path);
void write_depth_image(const DepthMap& depth, const std::filesystem::path& path);

// ---- point cloud export ----
std::string format_ply(const PointCloud& cloud);
PointCloud parse_ply(std::string_view text);
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_ply(const std::filesystem::path& path);

// ---- 8-bit RGB images ----
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace pseudolidar
