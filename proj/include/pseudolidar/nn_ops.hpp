#pragma once

// Minimal differentiable op set for the toy fusion network. Every op has an
// explicit backward that consumes the forward inputs it needs.

#include "pseudolidar/tensor.hpp"

namespace pseudolidar::nn {

/// Zero-padded ("same" for stride 1) square convolution.
/// weight: (C_out, C_in, k, k), k odd; bias: (C_out, 1, 1, 1); padding k / 2.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride);

/// Accumulates dL/dweight and dL/dbias; writes dL/dx when grad_x is non-null.
void conv2d_backward(const Tensor& x, const Tensor& weight, int stride, const Tensor& grad_out,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias);

Tensor relu(const Tensor& x);
/// dL/dx given the forward input x.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

Tensor add(const Tensor& a, const Tensor& b);

Tensor upsample2x_nearest(const Tensor& x);
Tensor upsample2x_nearest_backward(const Tensor& grad_out);

/// Bilinear resize by an integer factor with half-pixel centres and edge clamping.
Tensor upsample_bilinear(const Tensor& x, int factor);
Tensor upsample_bilinear_backward(const Tensor& grad_out, int factor);

}  // namespace pseudolidar::nn
