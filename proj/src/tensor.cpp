#include "pseudolidar/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "pseudolidar/error.hpp"

namespace pseudolidar {

Tensor::Tensor(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
  if (n < 0 || c < 0 || h < 0 || w < 0) throw ShapeError("tensor: negative dimension");
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(n_) + "," + std::to_string(c_) + "," + std::to_string(h_) + "," +
         std::to_string(w_) + ")";
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_inplace(const Tensor& other) {
  if (!same_shape(other)) {
    throw ShapeError("tensor add: " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace pseudolidar
