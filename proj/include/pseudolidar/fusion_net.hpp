#pragma once

// Toy LiDAR/stereo late-fusion network.
//
// Each side (left, right) runs the same two towers with shared weights:
//   image tower  3 -> C0 stem, 4 residual stages (stride 2 each, 1/16)
//   lidar tower  2 -> C0 stem, same topology; input is (depth / 80, valid)
// and each tower owns a 3-stage up-projection decoder:
//   1/16 -> 1/8 -> 1/4 -> 1/4 (the last stage refines without upsampling)
// After every decoder stage the lidar features are added into the image
// features. The fused 1/4-resolution map (F channels) feeds the cost volume.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pseudolidar/cost_volume.hpp"
#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/tensor.hpp"

namespace pseudolidar {

struct Architecture {
  int base_channels = 16;     // C0; stage i has C0 * 2^i channels
  int feature_channels = 32;  // F
  bool cost_aggregation = false;
  double lidar_depth_scale = 80.0;  // sparse depth is divided by this
  // depth hypotheses of the cost volume
  double depth_min = DepthHypothesisGrid::kDefaultMin;
  double depth_max = DepthHypothesisGrid::kDefaultMax;
  int depth_count = DepthHypothesisGrid::kDefaultCount;

  static constexpr int kImageChannels = 3;
  static constexpr int kLidarChannels = 2;
  static constexpr int kEncoderStages = 4;
  static constexpr int kDecoderStages = 3;
  static constexpr int kInputMultiple = 16;

  DepthHypothesisGrid grid() const {
    return DepthHypothesisGrid::uniform(depth_min, depth_max, depth_count);
  }
  /// Throws InvariantError on non-positive channel counts or a bad grid.
  void validate() const;
  std::string to_json() const;
  static Architecture from_json(const std::string& text);
  bool operator==(const Architecture&) const = default;
};

/// Named parameter arrays, in a fixed declaration order.
class NetParams {
 public:
  NetParams() = default;

  /// He-normal weights, zero biases, deterministic in `seed`.
  static NetParams initialize(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  std::uint64_t seed() const { return seed_; }

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t parameter_count() const;

  /// Same names and shapes, all zeros.
  NetParams zeros_like() const;
  /// this += scale * other (same layout).
  void axpy(double scale, const NetParams& other);

  std::vector<std::uint8_t> serialize() const;
  static NetParams deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static NetParams load(const std::filesystem::path& path);

  bool operator==(const NetParams&) const = default;

 private:
  void add(std::string name, Tensor t);

  Architecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Encodes an RGB image as a (1, 3, H, W) tensor.
Tensor image_tensor(const RgbImage& image);
/// Encodes sparse depth as (1, 2, H, W): depth / scale and the validity mask.
Tensor sparse_tensor(const SparseDepthMap& sparse, double depth_scale);

/// Cached activations of one extract_features call.
struct FeatureTrace {
  struct Conv {
    Tensor input;
    Tensor output;  // pre-activation
  };
  struct Tower {
    Tensor input;
    Conv stem;
    struct Stage {
      Conv down, res_a, res_b;
      Tensor sum;  // down + res_b, pre-activation
    };
    std::vector<Stage> stages;
  };
  struct UpStage {
    Tensor input;      // stage input before upsampling
    Tensor upsampled;  // conv input
    Conv conv_a, conv_b, proj;
    Tensor sum;  // conv_b + proj, pre-activation
  };
  Tower image, lidar;
  std::vector<UpStage> image_up, lidar_up;
  Tensor features;

  /// Every tensor that passes through a ReLU, in a fixed order. Used to
  /// detect activation-pattern changes in finite-difference checks.
  std::vector<const Tensor*> relu_inputs() const;
};

struct FeatureGradients {
  Tensor image;  // dL/d(image tensor)
  Tensor lidar;  // dL/d(sparse tensor)
};

/// (1, F, H/4, W/4) features of one image/LiDAR pair. Throws ShapeError when
/// H or W is not divisible by 16 or the inputs disagree in size.
FeatureMap extract_features(const Tensor& image, const Tensor& lidar, const NetParams& params,
                            FeatureTrace* trace = nullptr);
FeatureMap extract_features(const RgbImage& image, const SparseDepthMap& sparse,
                            const NetParams& params);

/// Accumulates parameter gradients into `grads` and returns input gradients.
FeatureGradients extract_features_backward(const FeatureTrace& trace, const FeatureMap& grad_features,
                                           const NetParams& params, NetParams& grads);

/// Learned residual 3x3x3 smoothing of the disparity volume over in-range
/// entries. Parameters "aggregation.w" (1,3,3,3) and "aggregation.b".
class LearnedCostAggregator final : public CostAggregator {
 public:
  LearnedCostAggregator(const NetParams& params, NetParams* grads);
  CostVolume forward(const CostVolume& raw) override;
  CostVolume backward(const CostVolume& grad_aggregated) override;

 private:
  const NetParams& params_;
  NetParams* grads_;
  CostVolume raw_;
};

/// Inputs of one stereo + LiDAR sample.
struct StereoSample {
  RgbImage left_image;
  RgbImage right_image;
  SparseDepthMap left_sparse;
  SparseDepthMap right_sparse;
  DepthMap gt_depth;  // may be empty at inference
  CalibSet calib;
};

struct ForwardOptions {
  bool zero_lidar = false;  // ablation: feed zeros to the lidar tower
};

struct ForwardState {
  Tensor left_image, right_image, left_lidar, right_lidar;
  FeatureTrace left_trace, right_trace;
  DecvForward decv;
  std::unique_ptr<LearnedCostAggregator> aggregator;
  DepthMap coarse_depth;  // feature resolution
  DepthMap depth;         // full resolution
};

/// extract_features x2 -> build_dicv -> dicv_to_decv -> soft_argmin, then a
/// x4 bilinear upsample to the input size. Values lie in [D_min, D_max].
DepthMap forward_full(const StereoSample& sample, const NetParams& params,
                      ForwardState* state = nullptr, const ForwardOptions& options = {},
                      NetParams* grads_for_aggregator = nullptr);

/// Pixels where the ground truth is valid and inside the hypothesis range.
std::vector<std::uint8_t> training_mask(const DepthMap& gt, const Architecture& arch);

struct SampleGradient {
  double loss = 0.0;
  NetParams grads;
  Tensor grad_left_image, grad_right_image, grad_left_lidar, grad_right_lidar;
};

/// Smooth-L1 loss of one sample and its exact gradient w.r.t. all parameters
/// and network inputs.
SampleGradient loss_and_gradient(const StereoSample& sample, const NetParams& params,
                                 const ForwardOptions& options = {});
/// Forward-only smooth-L1 loss of one sample.
double sample_loss(const StereoSample& sample, const NetParams& params,
                   const ForwardOptions& options = {});
/// Mean per-sample loss over a set.
double dataset_loss(std::span<const StereoSample> samples, const NetParams& params,
                    const ForwardOptions& options = {});

/// Mean loss and mean gradient over a batch; per-sample work may run on
/// `threads` workers but the reduction order is fixed.
std::pair<double, NetParams> batch_gradient(std::span<const StereoSample> batch,
                                            const NetParams& params,
                                            const ForwardOptions& options = {}, int threads = 1);

/// One plain gradient-descent step. Returns (updated params, batch loss
/// before the update). Throws InvariantError on an empty batch.
std::pair<NetParams, double> train_step(std::span<const StereoSample> batch, const NetParams& params,
                                        double lr, const ForwardOptions& options = {},
                                        int threads = 1);

/// Adaptive-moment optimizer state (optional alternative to train_step).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(NetParams& params, const NetParams& grads);
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::optional<NetParams> m_, v_;
};

/// Worker count from PSEUDOLIDAR_THREADS (0 or unset = hardware concurrency).
int configured_threads();

}  // namespace pseudolidar
