#pragma once

#include "../mri/model.hpp"

namespace ugan {

// Distribution over sampling masks: target acceleration uniform on [r_min, r_max], Poisson-disc
// pattern with its own seed, fixed calibration block.
struct MaskDistribution
{
  Index h = 64, w = 64;
  double r_min = 4, r_max = 4;
  Index calib_h = 12, calib_w = 12;

  void validate() const;
  SamplingMask draw(Rng &rng) const;
};

// A' for one training step: a fresh mask from the distribution, the coil maps of the current
// example (sensitivities belong to the subject, not the acquisition).
ImagingModel SampleFreshModel(MaskDistribution const &dist, CoilMaps const &maps, double noise_sigma, Rng &rng);

} // namespace ugan
