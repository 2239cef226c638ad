#pragma once

#include "../types.hpp"
#include "mask.hpp"

#include <random>

namespace ugan {

using Rng = std::mt19937_64;

// Coil sensitivities [C, H, W]. `support` marks pixels where sum_c |S_c|^2 == 1 is promised;
// an empty support means everywhere.
struct CoilMaps
{
  CTensor s;
  Tensor support;

  Index coils() const { return s.dim(0); }
  Index h() const { return s.dim(1); }
  Index w() const { return s.dim(2); }
  bool in_support(Index y, Index x) const { return support.size() == 0 || support(y, x) > 0.5; }
  // max over supported pixels of |sum_c |S_c|^2 - 1|
  double partition_error() const;
};

class ImagingModel
{
public:
  ImagingModel() = default;
  ImagingModel(SamplingMask mask, CoilMaps maps, double noise_sigma = 0);

  SamplingMask const &mask() const { return mask_; }
  CoilMaps const &maps() const { return maps_; }
  double noise_sigma() const { return sigma_; }
  Index coils() const { return maps_.coils(); }
  Index h() const { return maps_.h(); }
  Index w() const { return maps_.w(); }

private:
  SamplingMask mask_;
  CoilMaps maps_;
  double sigma_ = 0;
};

// y_c = M . fft2c(S_c . x)
CTensor ForwardOp(CTensor const &x, ImagingModel const &m);
// sum_c conj(S_c) . ifft2c(M . y_c)
CTensor AdjointOp(CTensor const &y, ImagingModel const &m);
// Complex Gaussian noise of total standard deviation sigma (sigma/sqrt2 per part) on sampled
// locations only; unsampled entries are left exactly as they are.
CTensor AddNoise(CTensor const &y, SamplingMask const &mask, double sigma, Rng &rng);

// Largest singular value of A by power iteration on A^H A.
double OperatorNorm(ImagingModel const &m, Index iters, Rng &rng);

// Full (all-ones) mask of the given size
SamplingMask FullMask(Index h, Index w);

} // namespace ugan
