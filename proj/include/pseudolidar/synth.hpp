#pragma once

// Synthetic stereo + LiDAR scenes with exact ground truth.
//
// Scenes live in the left rectified camera frame (x right, y down, z
// forward): a ground plane at y = ground_height and yaw-rotated boxes
// standing on it. The right camera sits at (baseline, 0, 0).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "pseudolidar/eval.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "pseudolidar/geometry.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/lidar_ops.hpp"
#include "pseudolidar/point_cloud.hpp"
#include "pseudolidar/pseudo_cloud.hpp"

namespace pseudolidar {

struct Obstacle {
  Box3D box;  // bottom centre on the ground plane
  double albedo = 0.7;
  std::string type = "Car";
};

struct Scene {
  double ground_height = 1.65;  // m below the left camera
  double ground_albedo = 0.5;
  std::vector<Obstacle> obstacles;
  Intrinsics intrinsics;
  double baseline = 0.54;
  int height = 32;
  int width = 64;
  RigidTransform lidar_to_left;
  double max_range = 80.0;       // rays travelling farther report nothing
  double checker_size = 0.0;     // m; 0 disables the albedo checkerboard
  Point3 light_dir{0.2, -0.6, -0.77};  // towards the light, normalised on use
  std::uint64_t seed = 0;

  /// Throws InvariantError on b <= 0, bad intrinsics / image size, obstacles
  /// not standing on the ground or non-positive dimensions.
  void validate() const;
  CalibSet calib() const;
  Point3 camera_origin(Side side) const;
};

struct RayHit {
  double t = 0.0;  // distance along the (unnormalised) direction
  Point3 point;
  Point3 normal;
  double albedo = 0.0;  // after texturing
  int obstacle = -1;    // -1 = ground
};

/// Nearest intersection with t > 0 and |t * dir| <= max_range.
std::optional<RayHit> cast_ray(const Scene& scene, const Point3& origin, const Point3& dir);

/// Depth Z of the first hit along the camera ray through the continuous
/// pixel position (u, v); nullopt for sky / beyond range.
std::optional<double> depth_at(const Scene& scene, Side side, double u, double v);

/// Depth at every integer pixel centre.
DepthMap render_depth_gt(const Scene& scene, Side side);

/// One ray per (kept bin centre, azimuth cell centre); first hit in the
/// LiDAR frame with reflectance = albedo. `range_noise_sigma` > 0 perturbs
/// the range along the ray with Gaussian noise drawn from `noise_seed`.
RawScan simulate_lidar(const Scene& scene, const BeamConfig& cfg,
                       int azimuth_cells = kDefaultAzimuthCells, double range_noise_sigma = 0.0,
                       std::uint64_t noise_seed = 0);

/// Flat shading albedo * max(0, n . l) in all three channels.
std::pair<RgbImage, RgbImage> render_images(const Scene& scene);

/// Intensities rounded to the 8-bit grid used on disk.
RgbImage quantize_8bit(const RgbImage& image);

struct SynthConfig {
  int height = 32;
  int width = 64;
  double focal = 64.0;
  double baseline = 0.54;
  int min_obstacles = 2;
  int max_obstacles = 4;
  double min_distance = 6.0;
  double max_distance = 30.0;
  double checker_size = 0.5;
  double range_noise_sigma = 0.0;
  BeamConfig scan_beams = BeamConfig::all_beams();       // exported scan
  BeamConfig sparse_beams = BeamConfig::default_four_beam();  // network input

  void validate() const;
};

/// KITTI-like mount: LiDAR 8 cm above and 27 cm behind the left camera.
RigidTransform default_lidar_mount();

/// Per-scene stream: splitmix64 of (seed, index).
std::uint64_t scene_seed(std::uint64_t dataset_seed, std::uint64_t index);

Scene random_scene(std::uint64_t seed, const SynthConfig& cfg = {});

/// KITTI-style label of every obstacle (2D box, truncation, occlusion).
std::vector<LabelRecord> scene_labels(const Scene& scene);

struct SynthSample {
  Scene scene;
  StereoSample stereo;  // quantised images, sparse inputs, exact gt depth
  RawScan scan;         // scan_beams
  RawScan sparse_scan;  // sparse_beams subset of scan
  std::vector<LabelRecord> labels;
};

SynthSample make_sample(std::uint64_t seed, const SynthConfig& cfg = {});
/// Throws DomainError when n_scenes < 1.
std::vector<SynthSample> make_dataset(int n_scenes, std::uint64_t seed, const SynthConfig& cfg = {});

/// Writes image_2/, image_3/ (PPM), velodyne/ (.bin), calib/, label_2/ and
/// depth/ (16-bit PGM of the left ground truth), files named %06d.
void export_dataset(std::span<const SynthSample> samples, const std::filesystem::path& root);

/// Number of samples (files in calib/). Throws IoError when missing.
int dataset_size(const std::filesystem::path& root);

/// Loads one sample: images, calib, scan sparsified with `beams` and
/// rendered into both cameras, ground truth if depth/ has it.
StereoSample load_sample(const std::filesystem::path& root, int index,
                         const BeamConfig& beams = BeamConfig::default_four_beam());

std::string sample_name(int index);

}  // namespace pseudolidar
