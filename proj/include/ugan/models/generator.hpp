#pragma once

#include "../ad.hpp"
#include "../mri/model.hpp"
#include "../param_store.hpp"

namespace ugan {

struct GeneratorConfig
{
  Index iterations = 5; // unrolled steps T
  Index resblocks = 4;
  Index features = 32;
  Index kernel = 3;
  bool learn_step = true;
  double slope = 0.2;

  void validate() const;
  // Closed-form parameter count:
  //   T * [ lift (2F k^2 + F) + blocks * 2 (F^2 k^2 + F) + project (2F k^2 + 2) + step (1) ]
  Index parameter_count() const;
};

// Unrolled proximal-gradient reconstructor. Each iteration t applies a data-consistency step
//   x <- x - alpha_t A^H (A x - y)
// followed by a residual CNN on the two-channel (re, im) image
//   x <- x + project(blocks(lrelu(lift(x))))
// starting from x0 = A^H y. The projection conv is zero-initialised so an untrained generator
// is exactly T gradient steps on 1/2 ||Ax - y||^2.
class Generator
{
public:
  Generator() = default;
  Generator(GeneratorConfig cfg, Rng &rng);

  GeneratorConfig const &config() const { return cfg_; }
  ParamStore const &params() const { return params_; }
  ParamStore &params() { return params_; }

  // Names of parameters the optimiser must not touch (the step sizes when learn_step is off)
  std::vector<std::string> frozen() const;

  // y is [C, H, W, 2]; returns the image [H, W, 2]
  ad::Var forward(ad::Var const &y, ImagingModel const &model, std::vector<ad::Var> const &p) const;
  // Inference on plain complex data, no graph
  CTensor reconstruct(CTensor const &y, ImagingModel const &model) const;

private:
  GeneratorConfig cfg_;
  ParamStore params_;
};

// He-uniform initialisation for a [O, C, k, k] kernel
Tensor HeUniform(Shape const &shape, Rng &rng);

} // namespace ugan
