#pragma once

// Depth-completion metrics and KITTI-style BEV / 3D average precision.

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/kitti_io.hpp"

namespace pseudolidar {

struct DepthMetrics {
  double rmse_mm = 0.0;
  double mae_mm = 0.0;
  double irmse = 0.0;  // 1/km
  double imae = 0.0;   // 1/km
  std::size_t count = 0;

  std::string to_json() const;
};

inline constexpr double kEvalDepthMin = 1.0;
inline constexpr double kEvalDepthMax = 80.0;

/// Metrics over pixels where gt is valid and inside [1, 80] m.
/// Throws ShapeError on size mismatch, DomainError when no pixel qualifies
/// or the prediction is missing / non-positive on a counted pixel.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

/// KITTI box: (x, y, z) is the bottom centre in the camera frame (y down),
/// the box spans [y - h, y] vertically, l runs along the heading.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double h = 1.0, w = 1.0, l = 1.0;
  double yaw = 0.0;  // rotation_y

  static Box3D from_label(const LabelRecord& label);
  /// Throws DomainError unless all dimensions are positive and finite.
  void validate() const;
};

using Point2 = Eigen::Vector2d;  // (x, z) ground-plane coordinates

/// Footprint corners in the x-z plane, counter-clockwise in (x, z).
std::array<Point2, 4> bev_corners(const Box3D& box);

/// Signed shoelace area.
double polygon_area(std::span<const Point2> polygon);

/// Intersection of two convex polygons given counter-clockwise
/// (successive half-plane clipping).
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);

double bev_intersection_area(const Box3D& a, const Box3D& b);
double bev_iou(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

enum class Difficulty { kEasy, kModerate, kHard, kIgnored };
enum class EvalTask { kBev, k3d };

std::string to_string(Difficulty d);
std::string to_string(EvalTask t);
/// Throws ParseError on an unknown name.
Difficulty parse_difficulty(const std::string& name);
EvalTask parse_task(const std::string& name);

/// Tightest KITTI level a ground-truth label satisfies.
Difficulty assign_difficulty(const LabelRecord& label);

struct EvalConfig {
  double iou_threshold = 0.7;
  Difficulty difficulty = Difficulty::kModerate;
  EvalTask task = EvalTask::kBev;
  std::string class_name = "Car";

  /// Throws DomainError unless the threshold is in (0, 1] and the difficulty
  /// is not kIgnored.
  void validate() const;
};

struct ApResult {
  double ap = 0.0;
  std::array<double, 11> precision{};  // interpolated, at recall 0.0 .. 1.0
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t ground_truths = 0;

  std::string to_json(const EvalConfig& cfg) const;
};

/// Detection outcome after per-frame greedy matching.
enum class MatchOutcome { kTruePositive, kFalsePositive, kIgnored };

struct ScoredOutcome {
  double score = 0.0;
  MatchOutcome outcome = MatchOutcome::kFalsePositive;
};

/// Matches one frame: detections of cfg.class_name in descending score
/// (stable), each against the best unmatched in-class ground truth.
/// Returns the outcome of every class detection and the number of counted
/// ground truths.
std::vector<ScoredOutcome> match_frame(std::span<const LabelRecord> detections,
                                       std::span<const LabelRecord> ground_truth,
                                       const EvalConfig& cfg, std::size_t* counted_gt = nullptr);

/// 11-point interpolated AP over frames (dets[i] pairs with gts[i]).
/// Throws DomainError when no ground truth counts for the difficulty, and
/// ShapeError when the frame counts differ. Detections need a score.
ApResult average_precision_11(std::span<const std::vector<LabelRecord>> detections,
                              std::span<const std::vector<LabelRecord>> ground_truth,
                              const EvalConfig& cfg);

}  // namespace pseudolidar
