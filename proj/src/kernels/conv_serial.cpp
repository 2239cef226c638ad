#include "ugan/kernels/conv.hpp"

namespace ugan::kernels {

ConvGeom ConvGeom::From(Shape const &x, Shape const &w, Index stride)
{
  if (x.size() != 3 || w.size() != 4) {
    throw Error("conv2d expects x [C,H,W] and w [O,C,k,k], got {} and {}", ShapeStr(x), ShapeStr(w));
  }
  if (w[1] != x[0]) {
    throw Error("conv2d channel mismatch: input has {} channels, weights expect {}", x[0], w[1]);
  }
  if (w[2] != w[3] || w[2] % 2 == 0) {
    throw Error("conv2d needs an odd square kernel, got {}x{}", w[2], w[3]);
  }
  if (stride != 1 && stride != 2) {
    throw Error("conv2d stride must be 1 or 2, got {}", stride);
  }
  return ConvGeom{.c_in = x[0], .c_out = w[0], .h = x[1], .w = x[2], .k = w[2], .stride = stride};
}

namespace serial {

namespace {
inline bool Inside(Index v, Index n) { return v >= 0 && v < n; }
} // namespace

void Forward(ConvGeom const &g, double const *x, double const *w, double *y)
{
  Index const oh = g.out_h(), ow = g.out_w(), p = g.pad();
  for (Index o = 0; o < g.c_out; o++) {
    for (Index i = 0; i < oh; i++) {
      for (Index j = 0; j < ow; j++) {
        double sum = 0;
        for (Index c = 0; c < g.c_in; c++) {
          for (Index u = 0; u < g.k; u++) {
            for (Index v = 0; v < g.k; v++) {
              Index const iy = g.stride * i + u - p, ix = g.stride * j + v - p;
              if (Inside(iy, g.h) && Inside(ix, g.w)) {
                sum += w[((o * g.c_in + c) * g.k + u) * g.k + v] * x[(c * g.h + iy) * g.w + ix];
              }
            }
          }
        }
        y[(o * oh + i) * ow + j] = sum;
      }
    }
  }
}

void InputGrad(ConvGeom const &g, double const *gy, double const *w, double *gx)
{
  Index const oh = g.out_h(), ow = g.out_w(), p = g.pad();
  std::fill(gx, gx + g.c_in * g.h * g.w, 0.0);
  for (Index o = 0; o < g.c_out; o++) {
    for (Index i = 0; i < oh; i++) {
      for (Index j = 0; j < ow; j++) {
        double const d = gy[(o * oh + i) * ow + j];
        for (Index c = 0; c < g.c_in; c++) {
          for (Index u = 0; u < g.k; u++) {
            for (Index v = 0; v < g.k; v++) {
              Index const iy = g.stride * i + u - p, ix = g.stride * j + v - p;
              if (Inside(iy, g.h) && Inside(ix, g.w)) {
                gx[(c * g.h + iy) * g.w + ix] += w[((o * g.c_in + c) * g.k + u) * g.k + v] * d;
              }
            }
          }
        }
      }
    }
  }
}

void WeightGrad(ConvGeom const &g, double const *x, double const *gy, double *gw)
{
  Index const oh = g.out_h(), ow = g.out_w(), p = g.pad();
  for (Index o = 0; o < g.c_out; o++) {
    for (Index c = 0; c < g.c_in; c++) {
      for (Index u = 0; u < g.k; u++) {
        for (Index v = 0; v < g.k; v++) {
          double sum = 0;
          for (Index i = 0; i < oh; i++) {
            for (Index j = 0; j < ow; j++) {
              Index const iy = g.stride * i + u - p, ix = g.stride * j + v - p;
              if (Inside(iy, g.h) && Inside(ix, g.w)) {
                sum += gy[(o * oh + i) * ow + j] * x[(c * g.h + iy) * g.w + ix];
              }
            }
          }
          gw[((o * g.c_in + c) * g.k + u) * g.k + v] = sum;
        }
      }
    }
  }
}

} // namespace serial
} // namespace ugan::kernels
