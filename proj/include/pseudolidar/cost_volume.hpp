#pragma once

// Stereo matching cost volumes and depth regression.
//
//   features --build_dicv--> disparity volume --dicv_to_decv--> depth volume
//            --soft_argmin--> depth map --smooth_l1_loss--> scalar
//
// Every stage has an analytic backward; backward_through_decv chains them.

#include <cstdint>
#include <span>
#include <vector>

#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/tensor.hpp"

namespace pseudolidar {

enum class CostAxis { kDisparity, kDepth };

/// K x H x W matching costs over sorted hypotheses (px or m).
struct CostVolume {
  CostAxis axis = CostAxis::kDisparity;
  std::vector<double> hypotheses;
  int height = 0;
  int width = 0;
  std::vector<double> cost;

  CostVolume() = default;
  CostVolume(CostAxis axis, std::vector<double> hypotheses, int height, int width);

  int depth_count() const { return static_cast<int>(hypotheses.size()); }
  std::size_t index(int k, int y, int x) const {
    return (static_cast<std::size_t>(k) * height + y) * width + x;
  }
  double& at(int k, int y, int x) { return cost[index(k, y, x)]; }
  double at(int k, int y, int x) const { return cost[index(k, y, x)]; }
  CostVolume zeros_like() const { return CostVolume(axis, hypotheses, height, width); }
};

/// Depth hypotheses for the depth cost volume.
struct DepthHypothesisGrid {
  static constexpr double kDefaultMin = 1.0;   // m
  static constexpr double kDefaultMax = 80.0;  // m
  static constexpr int kDefaultCount = 96;

  std::vector<double> depths;

  /// `count` values uniformly spaced over [d_min, d_max] inclusive.
  static DepthHypothesisGrid uniform(double d_min = kDefaultMin, double d_max = kDefaultMax,
                                     int count = kDefaultCount);
  /// Throws InvariantError unless nonempty, positive and strictly increasing.
  void validate() const;
  double min() const { return depths.front(); }
  double max() const { return depths.back(); }
};

/// Cost assigned where the right-image column u - d falls outside the image.
inline constexpr double kOutOfRangeCost = 1e6;
/// Feature maps live at 1/4 of the input resolution.
inline constexpr int kFeatureDownsample = 4;

/// Optional learned refinement of the disparity volume (fusion_net supplies
/// one). forward may cache what backward needs; backward returns the
/// gradient w.r.t. the raw volume and accumulates its own parameter gradients.
class CostAggregator {
 public:
  virtual ~CostAggregator() = default;
  virtual CostVolume forward(const CostVolume& raw) = 0;
  virtual CostVolume backward(const CostVolume& grad_aggregated) = 0;
};

/// cost[d, y, x] = -<left(:, y, x), right(:, y, x - d)> for d in [0, max_disp);
/// kOutOfRangeCost where x - d < 0. Throws ShapeError on mismatched features.
CostVolume build_dicv(const FeatureMap& left, const FeatureMap& right, int max_disp);

/// Gradients of build_dicv w.r.t. both feature maps.
void build_dicv_backward(const FeatureMap& left, const FeatureMap& right, const CostVolume& grad,
                         FeatureMap& grad_left, FeatureMap& grad_right);

/// Interpolation tap of one depth hypothesis on the disparity axis.
struct DisparityTap {
  int lower = 0;
  int upper = 0;
  double weight_upper = 0.0;  // cost = (1 - w) * cost[lower] + w * cost[upper]
};

/// Feature-resolution disparity of each depth: f_U * b / (D * downsample),
/// clamped to [0, max_disp - 1].
std::vector<DisparityTap> disparity_taps(const std::vector<double>& depths, int max_disp, double fu,
                                         double baseline, int downsample = kFeatureDownsample);

/// Resamples a disparity volume onto depth hypotheses by linear
/// interpolation along the disparity axis. Throws InvariantError on a
/// depth-kind input.
CostVolume dicv_to_decv(const CostVolume& disparity_volume, const DepthHypothesisGrid& grid,
                        double fu, double baseline, int downsample = kFeatureDownsample);
CostVolume dicv_to_decv_backward(const std::vector<DisparityTap>& taps,
                                 const CostVolume& disparity_volume_shape,
                                 const CostVolume& grad_depth_volume);

struct SoftArgminResult {
  DepthMap depth;               // all pixels valid
  std::vector<double> weights;  // K x H x W softmax weights
};

/// depth(y, x) = sum_k softmax_k(-cost)(y, x) * D_k, computed with the
/// per-pixel maximum subtracted.
SoftArgminResult soft_argmin(const CostVolume& depth_volume);
/// dL/dcost given dL/ddepth (H x W, row-major).
CostVolume soft_argmin_backward(const CostVolume& depth_volume, const SoftArgminResult& forward,
                                std::span<const double> grad_depth);

struct SmoothL1Result {
  double loss = 0.0;
  std::vector<double> grad;  // dL/dpred, H x W row-major, zero off-mask
  std::size_t count = 0;     // masked pixels
};

/// Mean over masked pixels of 0.5 x^2 (|x| < 1) or |x| - 0.5, x = pred - gt.
/// The mask must be a subset of gt validity; throws DomainError when empty.
SmoothL1Result smooth_l1_loss(const DepthMap& pred, const DepthMap& gt,
                              std::span<const std::uint8_t> mask);
/// Mask = gt validity.
SmoothL1Result smooth_l1_loss(const DepthMap& pred, const DepthMap& gt);

/// Saved activations of the differentiable chain features -> depth.
struct DecvForward {
  FeatureMap left;
  FeatureMap right;
  int max_disp = 0;
  CostVolume raw_disparity;
  CostVolume disparity;  // after optional aggregation
  std::vector<DisparityTap> taps;
  CostVolume depth_volume;
  SoftArgminResult regression;
  CostAggregator* aggregator = nullptr;
};

DecvForward forward_decv(const FeatureMap& left, const FeatureMap& right, int max_disp,
                         const DepthHypothesisGrid& grid, double fu, double baseline,
                         int downsample = kFeatureDownsample, CostAggregator* aggregator = nullptr);

struct DecvGradients {
  CostVolume depth_volume;
  CostVolume disparity;
  FeatureMap left;
  FeatureMap right;
};

/// Reverse pass of forward_decv given dL/d(depth) at feature resolution.
/// Throws Error when `saved` does not hold a completed forward pass.
DecvGradients backward_through_decv(const DecvForward& saved, std::span<const double> grad_depth);

/// Smallest feature-resolution disparity count that covers the grid's
/// nearest depth: ceil(f_U * b / (D_min * downsample)) + 1.
int required_max_disparity(const DepthHypothesisGrid& grid, double fu, double baseline,
                           int downsample = kFeatureDownsample);

}  // namespace pseudolidar
