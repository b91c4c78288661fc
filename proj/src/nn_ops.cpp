#include "pseudolidar/nn_ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pseudolidar/error.hpp"

namespace pseudolidar::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  int c_in, h, w, k, pad, stride, h_out, w_out;
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& weight, int stride) {
  if (weight.c() != x.c()) {
    throw ShapeError("conv2d: input channels " + std::to_string(x.c()) + " != weight channels " +
                     std::to_string(weight.c()));
  }
  if (weight.h() != weight.w() || weight.h() % 2 == 0) throw ShapeError("conv2d: kernel must be square and odd");
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  ConvGeometry g{x.c(), x.h(), x.w(), weight.h(), weight.h() / 2, stride, 0, 0};
  g.h_out = (g.h + 2 * g.pad - g.k) / stride + 1;
  g.w_out = (g.w + 2 * g.pad - g.k) / stride + 1;
  if (g.h_out < 1 || g.w_out < 1) throw ShapeError("conv2d: input smaller than kernel");
  return g;
}

// col: (c_in * k * k) x (h_out * w_out)
void im2col(const double* image, const ConvGeometry& g, double* col) {
  const int cols = g.h_out * g.w_out;
  for (int c = 0; c < g.c_in; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        double* row = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < g.h_out; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          for (int ox = 0; ox < g.w_out; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            row[oy * g.w_out + ox] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w)
                                         ? image[(static_cast<std::size_t>(c) * g.h + iy) * g.w + ix]
                                         : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, const ConvGeometry& g, double* image) {
  const int cols = g.h_out * g.w_out;
  for (int c = 0; c < g.c_in; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const double* row = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * cols;
        for (int oy = 0; oy < g.h_out; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.w_out; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.w) continue;
            image[(static_cast<std::size_t>(c) * g.h + iy) * g.w + ix] += row[oy * g.w_out + ox];
          }
        }
      }
    }
  }
}

// Source sample positions for bilinear resize along one axis.
struct AxisTap {
  int i0, i1;
  double a;  // weight of i1
};

std::vector<AxisTap> bilinear_taps(int in, int factor) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(in) * factor);
  for (int o = 0; o < in * factor; ++o) {
    double src = (o + 0.5) / factor - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride) {
  const ConvGeometry g = conv_geometry(x, weight, stride);
  const int c_out = weight.n();
  if (bias.size() != static_cast<std::size_t>(c_out)) throw ShapeError("conv2d: bias size mismatch");
  Tensor out(x.n(), c_out, g.h_out, g.w_out);
  const int rows = g.c_in * g.k * g.k;
  const int cols = g.h_out * g.w_out;
  std::vector<double> col(static_cast<std::size_t>(rows) * cols);
  ConstMatrixMap w(weight.data(), c_out, rows);
  const Eigen::Map<const Eigen::VectorXd> b(bias.data(), c_out);
  for (int n = 0; n < x.n(); ++n) {
    im2col(x.data() + x.offset(n, 0, 0, 0), g, col.data());
    MatrixMap y(out.data() + out.offset(n, 0, 0, 0), c_out, cols);
    y.noalias() = w * ConstMatrixMap(col.data(), rows, cols);
    y.colwise() += b;
  }
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, int stride, const Tensor& grad_out,
                     Tensor* grad_x, Tensor& grad_weight, Tensor& grad_bias) {
  const ConvGeometry g = conv_geometry(x, weight, stride);
  const int c_out = weight.n();
  if (grad_out.n() != x.n() || grad_out.c() != c_out || grad_out.h() != g.h_out ||
      grad_out.w() != g.w_out) {
    throw ShapeError("conv2d_backward: grad_out shape " + grad_out.shape_string());
  }
  if (!grad_weight.same_shape(weight)) throw ShapeError("conv2d_backward: grad_weight shape");
  if (grad_bias.size() != static_cast<std::size_t>(c_out)) throw ShapeError("conv2d_backward: grad_bias shape");
  if (grad_x) *grad_x = x.zeros_like();

  const int rows = g.c_in * g.k * g.k;
  const int cols = g.h_out * g.w_out;
  std::vector<double> col(static_cast<std::size_t>(rows) * cols);
  std::vector<double> dcol(static_cast<std::size_t>(rows) * cols);
  ConstMatrixMap w(weight.data(), c_out, rows);
  MatrixMap dw(grad_weight.data(), c_out, rows);
  for (int n = 0; n < x.n(); ++n) {
    ConstMatrixMap dy(grad_out.data() + grad_out.offset(n, 0, 0, 0), c_out, cols);
    im2col(x.data() + x.offset(n, 0, 0, 0), g, col.data());
    dw.noalias() += dy * ConstMatrixMap(col.data(), rows, cols).transpose();
    // Plain loop: Eigen's reduction order depends on buffer alignment.
    for (int c = 0; c < c_out; ++c) {
      const double* row = grad_out.data() + grad_out.offset(n, c, 0, 0);
      double sum = 0.0;
      for (int i = 0; i < cols; ++i) sum += row[i];
      grad_bias[c] += sum;
    }
    if (grad_x) {
      MatrixMap dc(dcol.data(), rows, cols);
      dc.noalias() = w.transpose() * dy;
      col2im(dcol.data(), g, grad_x->data() + grad_x->offset(n, 0, 0, 0));
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (!x.same_shape(grad_out)) throw ShapeError("relu_backward: shape mismatch");
  Tensor out = grad_out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x[i] > 0.0)) out[i] = 0.0;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out.add_inplace(b);
  return out;
}

Tensor upsample2x_nearest(const Tensor& x) {
  Tensor out(x.n(), x.c(), x.h() * 2, x.w() * 2);
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < out.h(); ++y)
        for (int xx = 0; xx < out.w(); ++xx) out.at(n, c, y, xx) = x.at(n, c, y / 2, xx / 2);
  return out;
}

Tensor upsample2x_nearest_backward(const Tensor& grad_out) {
  if (grad_out.h() % 2 != 0 || grad_out.w() % 2 != 0) {
    throw ShapeError("upsample2x_nearest_backward: odd gradient size");
  }
  Tensor out(grad_out.n(), grad_out.c(), grad_out.h() / 2, grad_out.w() / 2);
  for (int n = 0; n < grad_out.n(); ++n)
    for (int c = 0; c < grad_out.c(); ++c)
      for (int y = 0; y < grad_out.h(); ++y)
        for (int xx = 0; xx < grad_out.w(); ++xx) out.at(n, c, y / 2, xx / 2) += grad_out.at(n, c, y, xx);
  return out;
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
  if (factor < 1) throw ShapeError("upsample_bilinear: factor must be positive");
  const auto ty = bilinear_taps(x.h(), factor);
  const auto tx = bilinear_taps(x.w(), factor);
  Tensor out(x.n(), x.c(), x.h() * factor, x.w() * factor);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int oy = 0; oy < out.h(); ++oy) {
        const AxisTap& a = ty[oy];
        for (int ox = 0; ox < out.w(); ++ox) {
          const AxisTap& b = tx[ox];
          const double top = (1 - b.a) * x.at(n, c, a.i0, b.i0) + b.a * x.at(n, c, a.i0, b.i1);
          const double bottom = (1 - b.a) * x.at(n, c, a.i1, b.i0) + b.a * x.at(n, c, a.i1, b.i1);
          out.at(n, c, oy, ox) = (1 - a.a) * top + a.a * bottom;
        }
      }
    }
  }
  return out;
}

Tensor upsample_bilinear_backward(const Tensor& grad_out, int factor) {
  if (factor < 1 || grad_out.h() % factor != 0 || grad_out.w() % factor != 0) {
    throw ShapeError("upsample_bilinear_backward: size not divisible by factor");
  }
  Tensor out(grad_out.n(), grad_out.c(), grad_out.h() / factor, grad_out.w() / factor);
  const auto ty = bilinear_taps(out.h(), factor);
  const auto tx = bilinear_taps(out.w(), factor);
  for (int n = 0; n < out.n(); ++n) {
    for (int c = 0; c < out.c(); ++c) {
      for (int oy = 0; oy < grad_out.h(); ++oy) {
        const AxisTap& a = ty[oy];
        for (int ox = 0; ox < grad_out.w(); ++ox) {
          const AxisTap& b = tx[ox];
          const double g = grad_out.at(n, c, oy, ox);
          out.at(n, c, a.i0, b.i0) += (1 - a.a) * (1 - b.a) * g;
          out.at(n, c, a.i0, b.i1) += (1 - a.a) * b.a * g;
          out.at(n, c, a.i1, b.i0) += a.a * (1 - b.a) * g;
          out.at(n, c, a.i1, b.i1) += a.a * b.a * g;
        }
      }
    }
  }
  return out;
}

}  // namespace pseudolidar::nn
