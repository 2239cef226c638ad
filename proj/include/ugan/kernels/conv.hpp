#pragma once

#include "../types.hpp"

// 2-D cross-correlation kernels with zero "same" padding (pad = k / 2) and stride 1 or 2.
//
//   x  [C_in, H, W]       w  [C_out, C_in, k, k]       y  [C_out, ceil(H/s), ceil(W/s)]
//   y[o, i, j] = sum_{c, u, v} w[o, c, u, v] * x[c, s*i + u - pad, s*j + v - pad]
//
// Three kernels cover the forward pass and both vector-Jacobian products. The serial versions
// are plain nested loops kept as the reference. The parallel versions lower each call to
// im2col + GEMM over fixed-size tiles of output pixels, one OpenMP task per tile; partial results
// are combined in tile order, so results do not depend on the thread count.
namespace ugan::kernels {

struct ConvGeom
{
  Index c_in, c_out, h, w, k, stride;

  Index pad() const { return k / 2; }
  Index out_h() const { return (h + stride - 1) / stride; }
  Index out_w() const { return (w + stride - 1) / stride; }

  static ConvGeom From(Shape const &x, Shape const &w, Index stride);
};

namespace serial {
void Forward(ConvGeom const &g, double const *x, double const *w, double *y);
void InputGrad(ConvGeom const &g, double const *gy, double const *w, double *gx);
void WeightGrad(ConvGeom const &g, double const *x, double const *gy, double *gw);
} // namespace serial

namespace parallel {
void Forward(ConvGeom const &g, double const *x, double const *w, double *y);
void InputGrad(ConvGeom const &g, double const *gy, double const *w, double *gx);
void WeightGrad(ConvGeom const &g, double const *x, double const *gy, double *gw);
} // namespace parallel

} // namespace ugan::kernels
