#include "ugan/kernels/conv.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <algorithm>
#include <vector>

namespace ugan::kernels::parallel {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<RowMat const>;
using Stride = Eigen::OuterStride<>;

// Output rows per tile, about 512 pixels. Tiles are fixed by geometry alone, so the summation
// order inside each GEMM, and therefore the result, does not depend on how many threads run.
Index TileRows(ConvGeom const &g) { return std::max<Index>(1, 512 / g.out_w()); }
Index Tiles(ConvGeom const &g) { return (g.out_h() + TileRows(g) - 1) / TileRows(g); }

// Output columns j in [lo, hi) whose tap s*j + off lands inside [0, n)
inline std::pair<Index, Index> Valid(Index off, Index n, Index s, Index nout)
{
  Index const lo = off >= 0 ? 0 : (-off + s - 1) / s;
  Index const hi = (n - 1 - off) < 0 ? 0 : (n - 1 - off) / s + 1;
  return {std::max<Index>(lo, 0), std::min(hi, nout)};
}

// im2col block for output rows [r0, r1): rows (c, u, v), one column per output pixel
void Im2col(ConvGeom const &g, double const *x, Index r0, Index r1, double *col)
{
  Index const ow = g.out_w(), p = g.pad(), s = g.stride, k = g.k, n = (r1 - r0) * ow;
  std::fill(col, col + g.c_in * k * k * n, 0.0);
  for (Index c = 0; c < g.c_in; c++) {
    double const *plane = x + c * g.h * g.w;
    for (Index u = 0; u < k; u++) {
      for (Index v = 0; v < k; v++) {
        double *dst = col + ((c * k + u) * k + v) * n;
        auto const [lo, hi] = Valid(v - p, g.w, s, ow);
        for (Index i = r0; i < r1; i++) {
          Index const iy = s * i + u - p;
          if (iy < 0 || iy >= g.h) {
            continue;
          }
          double const *src = plane + iy * g.w + v - p;
          double *d = dst + (i - r0) * ow;
          for (Index j = lo; j < hi; j++) {
            d[j] = src[s * j];
          }
        }
      }
    }
  }
}

// Scatter-add an im2col block back onto the input planes
void Col2im(ConvGeom const &g, double const *col, Index r0, Index r1, double *x)
{
  Index const ow = g.out_w(), p = g.pad(), s = g.stride, k = g.k, n = (r1 - r0) * ow;
  for (Index c = 0; c < g.c_in; c++) {
    double *plane = x + c * g.h * g.w;
    for (Index u = 0; u < k; u++) {
      for (Index v = 0; v < k; v++) {
        double const *src = col + ((c * k + u) * k + v) * n;
        auto const [lo, hi] = Valid(v - p, g.w, s, ow);
        for (Index i = r0; i < r1; i++) {
          Index const iy = s * i + u - p;
          if (iy < 0 || iy >= g.h) {
            continue;
          }
          double *dst = plane + iy * g.w + v - p;
          double const *sr = src + (i - r0) * ow;
          for (Index j = lo; j < hi; j++) {
            dst[s * j] += sr[j];
          }
        }
      }
    }
  }
}

} // namespace

void Forward(ConvGeom const &g, double const *x, double const *w, double *y)
{
  Index const P = g.out_h() * g.out_w(), K = g.c_in * g.k * g.k, nt = Tiles(g);
  CMapR const W(w, g.c_out, K);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nt; t++) {
    Index const r0 = t * TileRows(g), r1 = std::min(g.out_h(), r0 + TileRows(g));
    Index const p0 = r0 * g.out_w(), n = (r1 - r0) * g.out_w();
    std::vector<double> col(static_cast<std::size_t>(K * n));
    Im2col(g, x, r0, r1, col.data());
    Eigen::Map<RowMat, 0, Stride> Y(y + p0, g.c_out, n, Stride(P));
    Y.noalias() = W * CMapR(col.data(), K, n);
  }
}

void InputGrad(ConvGeom const &g, double const *gy, double const *w, double *gx)
{
  Index const P = g.out_h() * g.out_w(), K = g.c_in * g.k * g.k, nt = Tiles(g);
  CMapR const W(w, g.c_out, K);
  std::fill(gx, gx + g.c_in * g.h * g.w, 0.0);
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(nt));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nt; t++) {
    Index const r0 = t * TileRows(g), r1 = std::min(g.out_h(), r0 + TileRows(g));
    Index const p0 = r0 * g.out_w(), n = (r1 - r0) * g.out_w();
    cols[t].resize(static_cast<std::size_t>(K * n));
    Eigen::Map<RowMat const, 0, Stride> G(gy + p0, g.c_out, n, Stride(P));
    MapR(cols[t].data(), K, n).noalias() = W.transpose() * G;
  }
  // tiles overlap on the input through the kernel footprint; scatter in tile order
  for (Index t = 0; t < nt; t++) {
    Index const r0 = t * TileRows(g), r1 = std::min(g.out_h(), r0 + TileRows(g));
    Col2im(g, cols[t].data(), r0, r1, gx);
  }
}

void WeightGrad(ConvGeom const &g, double const *x, double const *gy, double *gw)
{
  Index const P = g.out_h() * g.out_w(), K = g.c_in * g.k * g.k, nt = Tiles(g);
  std::vector<RowMat> part(static_cast<std::size_t>(nt));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nt; t++) {
    Index const r0 = t * TileRows(g), r1 = std::min(g.out_h(), r0 + TileRows(g));
    Index const p0 = r0 * g.out_w(), n = (r1 - r0) * g.out_w();
    std::vector<double> col(static_cast<std::size_t>(K * n));
    Im2col(g, x, r0, r1, col.data());
    Eigen::Map<RowMat const, 0, Stride> G(gy + p0, g.c_out, n, Stride(P));
    part[t].noalias() = G * CMapR(col.data(), K, n).transpose();
  }
  MapR GW(gw, g.c_out, K);
  GW.setZero();
  for (Index t = 0; t < nt; t++) {
    GW += part[t];
  }
}

} // namespace ugan::kernels::parallel
