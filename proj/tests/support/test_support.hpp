#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance runner. Nothing here calls the code path it checks.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pseudolidar/cost_volume.hpp"
#include "pseudolidar/eval.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "pseudolidar/geometry.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/point_cloud.hpp"

namespace pseudolidar::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

double uniform(std::mt19937_64& rng, double lo, double hi);
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);
Intrinsics random_intrinsics(std::mt19937_64& rng);
RigidTransform random_transform(std::mt19937_64& rng);
/// Rectified rig with the LiDAR mounted at a random pose.
CalibSet random_calib(std::mt19937_64& rng, int width, int height);

// ---- geometry
struct RoundTripReport {
  double max_project_error = 0.0;  // pixel/depth units
  double max_frame_error = 0.0;    // m
  double max_disparity_error = 0.0;  // relative
  double seconds = 0.0;
};
RoundTripReport geometry_round_trips(std::uint64_t seed, int count);

// ---- pseudo cloud
struct CloudRoundTripReport {
  double max_error = 0.0;   // m over valid pixels
  std::size_t mismatched_validity = 0;
  double seconds = 0.0;
};
/// Random 64x64 maps with ~70 % valid pixels -> depth_to_cloud -> re-render.
CloudRoundTripReport pseudo_cloud_round_trips(std::uint64_t seed, int maps, int size = 64);

// ---- cost volume
/// Scalar re-derivation of one depth-volume entry from the disparity volume.
double decv_oracle(const CostVolume& dicv, double depth, double fu, double baseline, int downsample,
                   int y, int x);
/// Softmax-weighted depth without max subtraction, in long double.
double soft_argmin_oracle(const CostVolume& depth_volume, int y, int x);
CostVolume random_disparity_volume(std::mt19937_64& rng, int max_disp, int h, int w);

// ---- gradient check
struct GradientCheckReport {
  int instances = 0;
  int checked = 0;
  int skipped_kinks = 0;   // coordinates whose ReLU / loss branch flips within +-h
  double max_rel_error = 0.0;
  std::string worst;
  double seconds = 0.0;
};
inline constexpr double kFdStep = 1e-4;
/// Relative error with a floor on the denominator: |a - n| / max(|a|, |n|, floor).
inline constexpr double kRelErrorFloor = 1e-5;

/// Small instance: 16x16 inputs, base_channels 2, feature_channels 4.
StereoSample random_toy_sample(std::mt19937_64& rng, int size = 16);
Architecture toy_architecture();
GradientCheckReport full_chain_gradient_check(std::uint64_t seed, int instances, int coords_per_instance,
                                              bool cost_aggregation = false);

// ---- depth metrics
DepthMetrics depth_metrics_oracle(const DepthMap& pred, const DepthMap& gt);
double relative_difference(double a, double b);

// ---- detection
/// Area of the BEV intersection by uniform sampling of the union bounding rectangle.
double monte_carlo_bev_iou(const Box3D& a, const Box3D& b, int samples, std::uint64_t seed);
Box3D random_box_near(std::mt19937_64& rng, const Box3D* anchor);

struct DetectionFixture {
  std::vector<std::vector<LabelRecord>> detections;
  std::vector<std::vector<LabelRecord>> ground_truth;
};
/// 3 frames, 3 easy cars; detections: 2 true positives and 1 false positive
/// at distinct scores, plus a DontCare-suppressed detection.
DetectionFixture three_frame_fixture();
LabelRecord car_label(double x, double z, double yaw, double height_px = 60.0);
LabelRecord detection_from(const LabelRecord& gt, double score);

/// AP by enumerating every score cutoff: for each distinct score s the
/// detections with score >= s give one (recall, precision) point. Each
/// detection's TP/FP status is supplied by the caller.
double exhaustive_cutoff_ap(const std::vector<std::pair<double, bool>>& scored_tp, std::size_t positives);

}  // namespace pseudolidar::testing
