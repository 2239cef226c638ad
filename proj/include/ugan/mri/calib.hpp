#pragma once

#include "model.hpp"

namespace ugan {

// Sensitivities from a fully sampled calibration block [C, h, w]: taper, zero-pad to H x W,
// inverse FFT, divide by the root-sum-of-squares. Pixels below 5% of the peak RSS are outside
// the support and set to zero.
CoilMaps LowresMaps(CTensor const &calib, Index H, Index W, double support_frac = 0.05);

// Centred h x w block of multicoil k-space [C, H, W]
CTensor ExtractCalib(CTensor const &kspace, Index h, Index w);

struct Compressed
{
  CTensor data;     // [V, ...]
  CTensor basis;    // [C, V], columns are the retained right singular vectors
  double retained;  // sum of kept squared singular values over the total
};

// SVD coil compression of k-space laid out [C, ...] onto V virtual channels.
Compressed CoilCompress(CTensor const &kspace, Index n_virtual);
// Back to physical channels: data [V, ...] times basis^H
CTensor CoilExpand(CTensor const &compressed, CTensor const &basis);

} // namespace ugan
