#include "ugan/models/discriminator.hpp"

#include "ugan/models/generator.hpp"

namespace ugan {

using namespace ad;

LinearCritic::LinearCritic(Tensor w, double b)
{
  params_.add("w", std::move(w));
  params_.add("b", Tensor(Shape{}, b));
}

Var LinearCritic::score(Var const &m, std::vector<Var> const &p) const
{
  return Add(Dot(p.at(0), m), p.at(1));
}

void DiscriminatorConfig::validate() const
{
  if (features < 2 || resblocks < 0 || downsample < 0 || kernel < 1 || kernel % 2 == 0) {
    throw Error("invalid discriminator config: F={} blocks={} down={} k={}", features, resblocks, downsample, kernel);
  }
  if (!(slope > 0 && slope < 1)) {
    throw Error("discriminator leaky-ReLU slope must be in (0,1), got {}", slope);
  }
  if (!(dense_gain > 0)) {
    throw Error("discriminator dense_gain must be positive, got {}", dense_gain);
  }
}

Index DiscriminatorConfig::parameter_count() const
{
  Index const F = features, k2 = kernel * kernel;
  return (2 * F * k2 + F) + resblocks * 2 * (F * F * k2 + F) + downsample * (F * F * k2 + F) + (F + 1);
}

Discriminator::Discriminator(DiscriminatorConfig cfg, Rng &rng)
  : cfg_(cfg)
{
  cfg_.validate();
  Index const F = cfg_.features, k = cfg_.kernel;
  params_.add("lift.w", HeUniform({F, 2, k, k}, rng));
  params_.add("lift.b", Tensor(Shape{F}, 0.0));
  for (Index b = 0; b < cfg_.resblocks; b++) {
    auto const q = fmt::format("block{}", b);
    params_.add(q + ".conv1.w", HeUniform({F, F, k, k}, rng));
    params_.add(q + ".conv1.b", Tensor(Shape{F}, 0.0));
    params_.add(q + ".conv2.w", HeUniform({F, F, k, k}, rng));
    params_.add(q + ".conv2.b", Tensor(Shape{F}, 0.0));
  }
  for (Index d = 0; d < cfg_.downsample; d++) {
    auto const q = fmt::format("down{}", d);
    params_.add(q + ".w", HeUniform({F, F, k, k}, rng));
    params_.add(q + ".b", Tensor(Shape{F}, 0.0));
  }
  Tensor dense(Shape{F});
  double const bound = cfg_.dense_gain / std::sqrt(static_cast<double>(F));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto &v : dense.vec()) {
    v = u(rng);
  }
  params_.add("dense.w", std::move(dense));
  params_.add("dense.b", Tensor(Shape{}, 0.0));
  if (params_.count() != cfg_.parameter_count()) {
    throw Error("discriminator built {} parameters, config implies {}", params_.count(), cfg_.parameter_count());
  }
}

Var Discriminator::score(Var const &m, std::vector<Var> const &p) const
{
  if (p.size() != params_.size()) {
    throw Error("discriminator: {} parameter variables for {} parameters", p.size(), params_.size());
  }
  if (m.shape().size() != 3 || m.shape()[0] != 2) {
    throw Error("discriminator input must be [2,H,W], got {}", ShapeStr(m.shape()));
  }
  auto P = [&](std::string const &name) -> Var const & { return p[params_.index(name)]; };
  double const slope = cfg_.slope;

  Var h = LeakyRelu(Conv2d(m, P("lift.w"), P("lift.b")), slope);
  for (Index b = 0; b < cfg_.resblocks; b++) {
    auto const q = fmt::format("block{}", b);
    Var r = LeakyRelu(Conv2d(h, P(q + ".conv1.w"), P(q + ".conv1.b")), slope);
    h = LeakyRelu(Add(h, Conv2d(r, P(q + ".conv2.w"), P(q + ".conv2.b"))), slope);
  }
  for (Index d = 0; d < cfg_.downsample; d++) {
    auto const q = fmt::format("down{}", d);
    h = LeakyRelu(Conv2d(h, P(q + ".w"), P(q + ".b"), 2), slope);
  }
  Var pooled = SpatialMean(h);
  return LeakyRelu(Add(Dot(P("dense.w"), pooled), P("dense.b")), slope);
}

double Discriminator::operator()(Tensor const &m) const
{
  NoGradGuard guard;
  std::vector<Var> p;
  for (std::size_t i = 0; i < params_.size(); i++) {
    p.push_back(Var::Constant(params_.at(i)));
  }
  return score(Var::Constant(m), p).item();
}

Var Encode(Var const &y, ImagingModel const &model) { return ToChannels(Adjoint(y, model)); }

Var EncodeImage(Var const &x) { return ToChannels(x); }

} // namespace ugan
