#include "ugan/mri/calib.hpp"

#include "ugan/fft.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace ugan {

namespace {
// Hann taper that stays nonzero at the block edges
double Taper(Index i, Index n) { return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1))); }
} // namespace

CTensor ExtractCalib(CTensor const &kspace, Index h, Index w)
{
  Index const C = kspace.dim(0), H = kspace.dim(1), W = kspace.dim(2);
  if (h > H || w > W) {
    throw Error("calibration block {}x{} larger than k-space {}x{}", h, w, H, W);
  }
  CTensor out(Shape{C, h, w});
  Index const y0 = H / 2 - h / 2, x0 = W / 2 - w / 2;
  for (Index c = 0; c < C; c++) {
    for (Index y = 0; y < h; y++) {
      for (Index x = 0; x < w; x++) {
        out(c, y, x) = kspace(c, y0 + y, x0 + x);
      }
    }
  }
  return out;
}

CoilMaps LowresMaps(CTensor const &calib, Index H, Index W, double support_frac)
{
  if (calib.rank() != 3) {
    throw Error("calibration data must be [C,h,w], got {}", ShapeStr(calib.shape()));
  }
  Index const C = calib.dim(0), h = calib.dim(1), w = calib.dim(2);
  if (h > H || w > W) {
    throw Error("calibration block {}x{} larger than target {}x{}", h, w, H, W);
  }
  if (Norm(calib.span()) == 0) {
    throw Error("calibration data is all zero");
  }
  CTensor img(Shape{C, H, W});
  Index const y0 = H / 2 - h / 2, x0 = W / 2 - w / 2;
  for (Index c = 0; c < C; c++) {
    for (Index y = 0; y < h; y++) {
      for (Index x = 0; x < w; x++) {
        img(c, y0 + y, x0 + x) = calib(c, y, x) * Taper(y, h) * Taper(x, w);
      }
    }
  }
  img = ifft2c(img);

  Tensor rss(Shape{H, W});
  double peak = 0;
  for (Index p = 0; p < H * W; p++) {
    double s = 0;
    for (Index c = 0; c < C; c++) {
      s += std::norm(img[c * H * W + p]);
    }
    rss[p] = std::sqrt(s);
    peak = std::max(peak, rss[p]);
  }
  CoilMaps maps{.s = CTensor(Shape{C, H, W}), .support = Tensor(Shape{H, W}, 0.0)};
  for (Index p = 0; p < H * W; p++) {
    if (rss[p] < support_frac * peak || rss[p] == 0) {
      continue;
    }
    maps.support[p] = 1;
    for (Index c = 0; c < C; c++) {
      maps.s[c * H * W + p] = img[c * H * W + p] / rss[p];
    }
  }
  return maps;
}

Compressed CoilCompress(CTensor const &kspace, Index n_virtual)
{
  if (kspace.rank() < 1) {
    throw Error("coil compression needs a leading coil dimension");
  }
  Index const C = kspace.dim(0);
  Index const N = kspace.size() / std::max<Index>(C, 1);
  if (n_virtual < 1 || n_virtual > C) {
    throw Error("virtual channel count {} must be in [1, {}]", n_virtual, C);
  }
  Eigen::Map<Eigen::MatrixXcd const> X(kspace.data(), N, C);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(X, Eigen::ComputeThinV);
  auto const &sv = svd.singularValues();
  double total = sv.squaredNorm(), kept = sv.head(n_virtual).squaredNorm();

  Compressed out;
  out.retained = total > 0 ? kept / total : 1.0;
  Eigen::MatrixXcd const V = svd.matrixV().leftCols(n_virtual);
  out.basis = CTensor(Shape{C, n_virtual});
  Eigen::Map<Eigen::MatrixXcd>(out.basis.data(), n_virtual, C) = V.transpose();

  Shape s = kspace.shape();
  s[0] = n_virtual;
  out.data = CTensor(s);
  Eigen::Map<Eigen::MatrixXcd>(out.data.data(), N, n_virtual) = X * V;
  return out;
}

CTensor CoilExpand(CTensor const &compressed, CTensor const &basis)
{
  Index const C = basis.dim(0), V = basis.dim(1);
  if (compressed.dim(0) != V) {
    throw Error("compressed data has {} channels, basis expects {}", compressed.dim(0), V);
  }
  Index const N = compressed.size() / V;
  Eigen::Map<Eigen::MatrixXcd const> Vt(basis.data(), V, C); // row-major [C,V] read as col-major V x C
  Eigen::Map<Eigen::MatrixXcd const> Y(compressed.data(), N, V);
  Shape s = compressed.shape();
  s[0] = C;
  CTensor out(s);
  Eigen::Map<Eigen::MatrixXcd>(out.data(), N, C) = Y * Vt.conjugate();
  return out;
}

} // namespace ugan
