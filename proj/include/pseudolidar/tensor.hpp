#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pseudolidar {

/// Dense NCHW array of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0);

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w;
  }
  double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return n_ == other.n_ && c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  std::string shape_string() const;
  /// Zero tensor of the same shape.
  Tensor zeros_like() const { return Tensor(n_, c_, h_, w_); }
  void fill(double value);
  /// this += other (same shape).
  void add_inplace(const Tensor& other);
  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// A single C x H x W feature map (batch dimension 1).
using FeatureMap = Tensor;

}  // namespace pseudolidar
