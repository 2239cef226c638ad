#pragma once

#include "../ad.hpp"
#include "../param_store.hpp"

namespace ugan {

// Anything that scores a [2, H, W] measurement encoding with a real scalar. Losses are written
// against this so they can be checked with analytic critics.
class Critic
{
public:
  virtual ~Critic() = default;
  virtual ParamStore const &params() const = 0;
  virtual ParamStore &params() = 0;
  // Score with explicit parameter variables (one per params() entry, same order)
  virtual ad::Var score(ad::Var const &m, std::vector<ad::Var> const &p) const = 0;
};

// D(m) = <w, m> + b
class LinearCritic final : public Critic
{
public:
  LinearCritic(Tensor w, double b = 0);
  ParamStore const &params() const override { return params_; }
  ParamStore &params() override { return params_; }
  ad::Var score(ad::Var const &m, std::vector<ad::Var> const &p) const override;

private:
  ParamStore params_;
};

} // namespace ugan
