#pragma once

#include "../mri/model.hpp"
#include "critic.hpp"

namespace ugan {

struct DiscriminatorConfig
{
  Index features = 32;
  Index resblocks = 3;
  Index downsample = 2; // stride-2 stages
  Index kernel = 3;
  double slope = 0.2;
  // Dense weights start uniform in +-dense_gain/sqrt(F). Average pooling shrinks the input
  // gradient by the pooled area, so a gain well above 1 starts the critic near unit gradient norm.
  double dense_gain = 32;

  void validate() const;
  Index parameter_count() const;
};

// Residual convolutional critic without normalisation layers:
//   lift (2 -> F), lrelu, resblocks x [h + conv(lrelu(conv(h))), lrelu],
//   downsample x [stride-2 conv, lrelu], global average pool, dense -> 1, lrelu.
class Discriminator final : public Critic
{
public:
  Discriminator() = default;
  Discriminator(DiscriminatorConfig cfg, Rng &rng);

  DiscriminatorConfig const &config() const { return cfg_; }
  ParamStore const &params() const override { return params_; }
  ParamStore &params() override { return params_; }
  ad::Var score(ad::Var const &m, std::vector<ad::Var> const &p) const override;

  double operator()(Tensor const &m) const;

private:
  DiscriminatorConfig cfg_;
  ParamStore params_;
};

// Two-channel encoding of a measurement: the coil-combined zero-filled image A^H y as [2, H, W]
ad::Var Encode(ad::Var const &y, ImagingModel const &model);
// Two-channel encoding of an image [H, W, 2]
ad::Var EncodeImage(ad::Var const &x);

} // namespace ugan
