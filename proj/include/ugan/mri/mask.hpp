#pragma once

#include "../types.hpp"

#include <cstdint>
#include <iosfwd>

namespace ugan {

struct SamplingMask
{
  Tensor bits;            // [H, W] of 0/1 over the phase-encode grid
  double target_r = 1;    // requested acceleration
  Index calib_h = 0, calib_w = 0;
  std::uint64_t seed = 0;
  double beta = 0;        // calibrated density-ramp slope

  Index h() const { return bits.dim(0); }
  Index w() const { return bits.dim(1); }
  Index sampled() const;
  double acceleration() const; // total / sampled
  bool calibration_full() const;
};

// Variable-density Poisson-disc mask. The minimum distance between samples is
// (1 + beta * r / r_max) grid units, r being the distance from the k-space centre; beta is found
// by bisection so the measured acceleration lands within 10% of target_r. The centred
// calib_h x calib_w block is always sampled. Deterministic in seed.
SamplingMask PoissonDiscMask(Index h, Index w, double target_r, Index calib_h, Index calib_w, std::uint64_t seed);

// Same dart-throwing pass at a fixed ramp slope (no calibration); exposed for tests.
Tensor PoissonDiscAtBeta(Index h, Index w, double beta, Index calib_h, Index calib_w, std::uint64_t seed);

// Portable-bitmap text dump: "P1", dimensions, then one row per k_y line of 0/1 characters.
void WritePbm(std::ostream &os, SamplingMask const &m);
std::string MaskRows(SamplingMask const &m);

} // namespace ugan
