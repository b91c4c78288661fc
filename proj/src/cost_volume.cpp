#include "pseudolidar/cost_volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pseudolidar/error.hpp"

namespace pseudolidar {

CostVolume::CostVolume(CostAxis axis_, std::vector<double> hypotheses_, int height_, int width_)
    : axis(axis_), hypotheses(std::move(hypotheses_)), height(height_), width(width_) {
  cost.assign(hypotheses.size() * static_cast<std::size_t>(height) * width, 0.0);
}

DepthHypothesisGrid DepthHypothesisGrid::uniform(double d_min, double d_max, int count) {
  if (count < 1) throw InvariantError("depth grid: count must be positive");
  if (count == 1) return {{d_min}};
  DepthHypothesisGrid grid;
  grid.depths.resize(count);
  for (int k = 0; k < count; ++k) grid.depths[k] = d_min + (d_max - d_min) * k / (count - 1);
  grid.depths.back() = d_max;
  grid.validate();
  return grid;
}

void DepthHypothesisGrid::validate() const {
  if (depths.empty()) throw InvariantError("depth grid: empty");
  for (std::size_t k = 0; k < depths.size(); ++k) {
    if (!(depths[k] > 0.0) || !std::isfinite(depths[k])) {
      throw InvariantError("depth grid: hypotheses must be positive and finite");
    }
    if (k > 0 && !(depths[k] > depths[k - 1])) {
      throw InvariantError("depth grid: hypotheses must be strictly increasing");
    }
  }
}

int required_max_disparity(const DepthHypothesisGrid& grid, double fu, double baseline,
                           int downsample) {
  grid.validate();
  return static_cast<int>(std::ceil(fu * baseline / (grid.min() * downsample))) + 1;
}

// ---------------------------------------------------------------- DiCV

CostVolume build_dicv(const FeatureMap& left, const FeatureMap& right, int max_disp) {
  if (!left.same_shape(right)) {
    throw ShapeError("build_dicv: left " + left.shape_string() + " vs right " + right.shape_string());
  }
  if (left.n() != 1) throw ShapeError("build_dicv: feature maps must have batch size 1");
  if (max_disp < 1) throw ShapeError("build_dicv: max_disp must be at least 1");
  std::vector<double> hyp(max_disp);
  for (int d = 0; d < max_disp; ++d) hyp[d] = d;
  const int h = left.h(), w = left.w(), c = left.c();
  CostVolume cv(CostAxis::kDisparity, std::move(hyp), h, w);
  for (int d = 0; d < max_disp; ++d) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x - d < 0) {
          cv.at(d, y, x) = kOutOfRangeCost;
          continue;
        }
        double dot = 0.0;
        for (int ch = 0; ch < c; ++ch) dot += left.at(0, ch, y, x) * right.at(0, ch, y, x - d);
        cv.at(d, y, x) = -dot;
      }
    }
  }
  return cv;
}

void build_dicv_backward(const FeatureMap& left, const FeatureMap& right, const CostVolume& grad,
                         FeatureMap& grad_left, FeatureMap& grad_right) {
  if (grad.height != left.h() || grad.width != left.w()) throw ShapeError("build_dicv_backward: shape");
  grad_left = left.zeros_like();
  grad_right = right.zeros_like();
  const int c = left.c();
  for (int d = 0; d < grad.depth_count(); ++d) {
    for (int y = 0; y < grad.height; ++y) {
      for (int x = d; x < grad.width; ++x) {
        const double g = grad.at(d, y, x);
        if (g == 0.0) continue;
        for (int ch = 0; ch < c; ++ch) {
          grad_left.at(0, ch, y, x) -= g * right.at(0, ch, y, x - d);
          grad_right.at(0, ch, y, x - d) -= g * left.at(0, ch, y, x);
        }
      }
    }
  }
}

// ---------------------------------------------------------------- DeCV

std::vector<DisparityTap> disparity_taps(const std::vector<double>& depths, int max_disp, double fu,
                                         double baseline, int downsample) {
  if (max_disp < 1) throw ShapeError("disparity_taps: max_disp must be at least 1");
  std::vector<DisparityTap> taps;
  taps.reserve(depths.size());
  const double top = max_disp - 1;
  for (double depth : depths) {
    double d = fu * baseline / (depth * downsample);
    d = std::clamp(d, 0.0, top);
    const int lower = static_cast<int>(std::floor(d));
    const int upper = std::min(lower + 1, max_disp - 1);
    taps.push_back({lower, upper, upper == lower ? 0.0 : d - lower});
  }
  return taps;
}

CostVolume dicv_to_decv(const CostVolume& disparity_volume, const DepthHypothesisGrid& grid,
                        double fu, double baseline, int downsample) {
  if (disparity_volume.axis != CostAxis::kDisparity) {
    throw InvariantError("dicv_to_decv: input must be a disparity volume");
  }
  grid.validate();
  const auto taps =
      disparity_taps(grid.depths, disparity_volume.depth_count(), fu, baseline, downsample);
  CostVolume out(CostAxis::kDepth, grid.depths, disparity_volume.height, disparity_volume.width);
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const DisparityTap& t = taps[k];
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const double lo = disparity_volume.at(t.lower, y, x);
        const double hi = disparity_volume.at(t.upper, y, x);
        out.at(static_cast<int>(k), y, x) = (1.0 - t.weight_upper) * lo + t.weight_upper * hi;
      }
    }
  }
  return out;
}

CostVolume dicv_to_decv_backward(const std::vector<DisparityTap>& taps,
                                 const CostVolume& disparity_volume_shape,
                                 const CostVolume& grad_depth_volume) {
  CostVolume grad = disparity_volume_shape.zeros_like();
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const DisparityTap& t = taps[k];
    for (int y = 0; y < grad.height; ++y) {
      for (int x = 0; x < grad.width; ++x) {
        const double g = grad_depth_volume.at(static_cast<int>(k), y, x);
        grad.at(t.lower, y, x) += (1.0 - t.weight_upper) * g;
        grad.at(t.upper, y, x) += t.weight_upper * g;
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------- soft-argmin

SoftArgminResult soft_argmin(const CostVolume& depth_volume) {
  if (depth_volume.axis != CostAxis::kDepth) throw InvariantError("soft_argmin: depth volume expected");
  const int kk = depth_volume.depth_count();
  if (kk == 0) throw InvariantError("soft_argmin: no hypotheses");
  const double lo = depth_volume.hypotheses.front();
  const double hi = depth_volume.hypotheses.back();
  SoftArgminResult result;
  result.depth = DepthMap(depth_volume.height, depth_volume.width);
  result.weights.assign(depth_volume.cost.size(), 0.0);
  std::vector<double> e(kk);
  for (int y = 0; y < depth_volume.height; ++y) {
    for (int x = 0; x < depth_volume.width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < kk; ++k) best = std::min(best, depth_volume.at(k, y, x));
      double sum = 0.0;
      double weighted = 0.0;
      for (int k = 0; k < kk; ++k) {
        e[k] = std::exp(best - depth_volume.at(k, y, x));
        sum += e[k];
        weighted += e[k] * depth_volume.hypotheses[k];
      }
      for (int k = 0; k < kk; ++k) result.weights[depth_volume.index(k, y, x)] = e[k] / sum;
      result.depth.set(x, y, std::clamp(weighted / sum, lo, hi));
    }
  }
  return result;
}

CostVolume soft_argmin_backward(const CostVolume& depth_volume, const SoftArgminResult& forward,
                                std::span<const double> grad_depth) {
  if (grad_depth.size() != static_cast<std::size_t>(depth_volume.height) * depth_volume.width) {
    throw ShapeError("soft_argmin_backward: gradient size mismatch");
  }
  CostVolume grad = depth_volume.zeros_like();
  for (int y = 0; y < depth_volume.height; ++y) {
    for (int x = 0; x < depth_volume.width; ++x) {
      const double g = grad_depth[static_cast<std::size_t>(y) * depth_volume.width + x];
      const double mean = forward.depth.at(x, y);
      for (int k = 0; k < depth_volume.depth_count(); ++k) {
        const std::size_t i = depth_volume.index(k, y, x);
        grad.cost[i] = -g * forward.weights[i] * (depth_volume.hypotheses[k] - mean);
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------- loss

SmoothL1Result smooth_l1_loss(const DepthMap& pred, const DepthMap& gt,
                              std::span<const std::uint8_t> mask) {
  if (pred.height() != gt.height() || pred.width() != gt.width() || mask.size() != gt.size()) {
    throw ShapeError("smooth_l1_loss: shape mismatch");
  }
  SmoothL1Result result;
  result.grad.assign(gt.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!gt.mask()[i]) throw InvariantError("smooth_l1_loss: mask selects an invalid ground-truth pixel");
    const double x = pred.values()[i] - gt.values()[i];
    const double ax = std::abs(x);
    total += ax < 1.0 ? 0.5 * x * x : ax - 0.5;
    result.grad[i] = ax < 1.0 ? x : (x > 0 ? 1.0 : -1.0);
    ++result.count;
  }
  if (result.count == 0) throw DomainError("smooth_l1_loss: empty mask");
  const double n = static_cast<double>(result.count);
  result.loss = total / n;
  for (double& g : result.grad) g /= n;
  return result;
}

SmoothL1Result smooth_l1_loss(const DepthMap& pred, const DepthMap& gt) {
  return smooth_l1_loss(pred, gt, gt.mask());
}

// ---------------------------------------------------------------- chain

DecvForward forward_decv(const FeatureMap& left, const FeatureMap& right, int max_disp,
                         const DepthHypothesisGrid& grid, double fu, double baseline,
                         int downsample, CostAggregator* aggregator) {
  DecvForward s;
  s.left = left;
  s.right = right;
  s.max_disp = max_disp;
  s.raw_disparity = build_dicv(left, right, max_disp);
  s.disparity = aggregator ? aggregator->forward(s.raw_disparity) : s.raw_disparity;
  s.aggregator = aggregator;
  s.taps = disparity_taps(grid.depths, max_disp, fu, baseline, downsample);
  s.depth_volume = dicv_to_decv(s.disparity, grid, fu, baseline, downsample);
  s.regression = soft_argmin(s.depth_volume);
  return s;
}

DecvGradients backward_through_decv(const DecvForward& saved, std::span<const double> grad_depth) {
  if (saved.regression.weights.empty() || saved.taps.empty() || saved.left.empty()) {
    throw Error("backward_through_decv: no saved forward state");
  }
  DecvGradients g;
  g.depth_volume = soft_argmin_backward(saved.depth_volume, saved.regression, grad_depth);
  g.disparity = dicv_to_decv_backward(saved.taps, saved.disparity, g.depth_volume);
  const CostVolume grad_raw = saved.aggregator ? saved.aggregator->backward(g.disparity) : g.disparity;
  build_dicv_backward(saved.left, saved.right, grad_raw, g.left, g.right);
  return g;
}

}  // namespace pseudolidar
