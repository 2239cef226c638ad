#pragma once

#include "../mri/model.hpp"
#include "../train/mask_dist.hpp"

namespace ugan {

struct PhantomSpec
{
  Index h = 64, w = 64;
  Index coils = 4;
  Index min_ellipses = 3, max_ellipses = 8;
  Index phase_order = 2; // total degree of the polynomial phase; 0 gives a real image
  double noise_sigma = 0.01;
  double r_min = 4, r_max = 4;
  Index calib_h = 12, calib_w = 12;
  Index wavelet_levels = 3;
  Index n_train = 200, n_test = 20;
  std::uint64_t seed = 1;

  void validate() const;
  MaskDistribution masks() const { return {h, w, r_min, r_max, calib_h, calib_w}; }
};

// Named sizes: "desk" (64x64, 4 coils), "knee" (320x320 slices, 8 coils), "dce" (192x180, 8 coils)
PhantomSpec PhantomPreset(std::string const &name);

// Sum of random ellipses, magnitude clipped to [0, 1], times a smooth polynomial phase.
CTensor MakePhantom(Rng &rng, PhantomSpec const &spec);

// Gaussian-profile complex sensitivities centred just outside the field of view at evenly spaced
// angles, normalised so sum_c |S_c|^2 = 1 at every pixel.
CoilMaps MakeCoilmaps(Rng &rng, Index coils, Index h, Index w);

// Divide every pixel by its root-sum-of-squares across coils
void NormalizeMaps(CTensor &s);

} // namespace ugan
