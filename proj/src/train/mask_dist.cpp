#include "ugan/train/mask_dist.hpp"

namespace ugan {

void MaskDistribution::validate() const
{
  if (h < 1 || w < 1) {
    throw Error("mask distribution grid {}x{} is empty", h, w);
  }
  if (!(r_min >= 1 && r_max >= r_min)) {
    throw Error("mask distribution needs 1 <= r_min <= r_max, got [{}, {}]", r_min, r_max);
  }
  if (calib_h < 0 || calib_w < 0 || calib_h > h || calib_w > w) {
    throw Error("calibration {}x{} does not fit the {}x{} grid", calib_h, calib_w, h, w);
  }
}

SamplingMask MaskDistribution::draw(Rng &rng) const
{
  validate();
  double const r = r_min == r_max ? r_min : std::uniform_real_distribution<double>(r_min, r_max)(rng);
  std::uint64_t const seed = rng();
  return PoissonDiscMask(h, w, r, calib_h, calib_w, seed);
}

ImagingModel SampleFreshModel(MaskDistribution const &dist, CoilMaps const &maps, double noise_sigma, Rng &rng)
{
  if (maps.h() != dist.h || maps.w() != dist.w) {
    throw Error("coil maps {}x{} do not match the mask distribution grid {}x{}", maps.h(), maps.w(), dist.h, dist.w);
  }
  return ImagingModel(dist.draw(rng), maps, noise_sigma);
}

} // namespace ugan
