#include "ugan/mri/model.hpp"

#include "ugan/fft.hpp"

#include <cmath>

namespace ugan {

double CoilMaps::partition_error() const
{
  double worst = 0;
  for (Index y = 0; y < h(); y++) {
    for (Index x = 0; x < w(); x++) {
      if (!in_support(y, x)) {
        continue;
      }
      double e = 0;
      for (Index c = 0; c < coils(); c++) {
        e += std::norm(s(c, y, x));
      }
      worst = std::max(worst, std::abs(e - 1.0));
    }
  }
  return worst;
}

ImagingModel::ImagingModel(SamplingMask mask, CoilMaps maps, double noise_sigma)
  : mask_(std::move(mask))
  , maps_(std::move(maps))
  , sigma_(noise_sigma)
{
  if (maps_.s.rank() != 3) {
    throw Error("coil maps must be [C,H,W], got {}", ShapeStr(maps_.s.shape()));
  }
  if (mask_.h() != maps_.h() || mask_.w() != maps_.w()) {
    throw Error("mask {}x{} does not match coil maps {}x{}", mask_.h(), mask_.w(), maps_.h(), maps_.w());
  }
  if (sigma_ < 0) {
    throw Error("noise sigma must be >= 0, got {}", sigma_);
  }
}

CTensor ForwardOp(CTensor const &x, ImagingModel const &m)
{
  if (x.rank() != 2 || x.dim(0) != m.h() || x.dim(1) != m.w()) {
    throw Error("forward_op: image {} does not match model {}x{}", ShapeStr(x.shape()), m.h(), m.w());
  }
  Index const C = m.coils(), n = m.h() * m.w();
  CTensor y(Shape{C, m.h(), m.w()});
  auto const &S = m.maps().s;
  auto const &M = m.mask().bits;
  for (Index c = 0; c < C; c++) {
    auto img = y.span().subspan(static_cast<std::size_t>(c * n), static_cast<std::size_t>(n));
    for (Index i = 0; i < n; i++) {
      img[i] = S[c * n + i] * x[i];
    }
    fft2c_inplace(img, m.h(), m.w());
    for (Index i = 0; i < n; i++) {
      img[i] *= M[i];
    }
  }
  return y;
}

CTensor AdjointOp(CTensor const &y, ImagingModel const &m)
{
  if (y.rank() != 3 || y.dim(0) != m.coils() || y.dim(1) != m.h() || y.dim(2) != m.w()) {
    throw Error("adjoint_op: k-space {} does not match model [{},{},{}]", ShapeStr(y.shape()), m.coils(), m.h(), m.w());
  }
  Index const C = m.coils(), n = m.h() * m.w();
  CTensor x(Shape{m.h(), m.w()});
  auto const &S = m.maps().s;
  auto const &M = m.mask().bits;
  std::vector<Cx> tmp(static_cast<std::size_t>(n));
  for (Index c = 0; c < C; c++) {
    for (Index i = 0; i < n; i++) {
      tmp[i] = y[c * n + i] * M[i];
    }
    ifft2c_inplace(tmp, m.h(), m.w());
    for (Index i = 0; i < n; i++) {
      x[i] += std::conj(S[c * n + i]) * tmp[i];
    }
  }
  return x;
}

CTensor AddNoise(CTensor const &y, SamplingMask const &mask, double sigma, Rng &rng)
{
  if (sigma < 0) {
    throw Error("noise sigma must be >= 0, got {}", sigma);
  }
  CTensor out = y;
  if (sigma == 0) {
    return out;
  }
  Index const n = mask.h() * mask.w();
  if (y.size() % n != 0) {
    throw Error("add_noise: k-space {} does not tile mask {}x{}", ShapeStr(y.shape()), mask.h(), mask.w());
  }
  std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
  for (Index i = 0; i < out.size(); i++) {
    if (mask.bits[i % n] > 0.5) {
      double const re = gauss(rng);
      double const im = gauss(rng);
      out[i] += Cx(re, im);
    }
  }
  return out;
}

double OperatorNorm(ImagingModel const &m, Index iters, Rng &rng)
{
  std::normal_distribution<double> gauss;
  CTensor x(Shape{m.h(), m.w()});
  for (auto &v : x.vec()) {
    v = Cx(gauss(rng), gauss(rng));
  }
  double lambda = 0;
  for (Index it = 0; it < iters; it++) {
    double const nx = Norm(x.span());
    for (auto &v : x.vec()) {
      v /= nx;
    }
    x = AdjointOp(ForwardOp(x, m), m);
    lambda = Norm(x.span());
  }
  return std::sqrt(lambda);
}

SamplingMask FullMask(Index h, Index w)
{
  SamplingMask m;
  m.bits = Tensor(Shape{h, w}, 1.0);
  m.target_r = 1;
  return m;
}

} // namespace ugan
