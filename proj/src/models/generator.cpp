#include "ugan/models/generator.hpp"

#include <cmath>

namespace ugan {

using namespace ad;

Tensor HeUniform(Shape const &shape, Rng &rng)
{
  Index const fan_in = shape.at(1) * shape.at(2) * shape.at(3);
  double const bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t(shape);
  for (auto &v : t.vec()) {
    v = u(rng);
  }
  return t;
}

void GeneratorConfig::validate() const
{
  if (iterations < 1 || resblocks < 1 || features < 2 || kernel < 1 || kernel % 2 == 0) {
    throw Error("invalid generator config: T={} blocks={} F={} k={} (need T>=1, blocks>=1, F>=2, odd k)",
      iterations, resblocks, features, kernel);
  }
  if (!(slope > 0 && slope < 1)) {
    throw Error("generator leaky-ReLU slope must be in (0,1), got {}", slope);
  }
}

Index GeneratorConfig::parameter_count() const
{
  Index const F = features, k2 = kernel * kernel;
  Index const lift = 2 * F * k2 + F;
  Index const block = 2 * (F * F * k2 + F);
  Index const project = 2 * F * k2 + 2;
  return iterations * (lift + resblocks * block + project + 1);
}

namespace {
std::string It(Index t) { return fmt::format("it{}", t); }
} // namespace

Generator::Generator(GeneratorConfig cfg, Rng &rng)
  : cfg_(cfg)
{
  cfg_.validate();
  Index const F = cfg_.features, k = cfg_.kernel;
  for (Index t = 0; t < cfg_.iterations; t++) {
    auto const p = It(t);
    params_.add(p + ".alpha", Tensor(Shape{}, 1.0));
    params_.add(p + ".lift.w", HeUniform({F, 2, k, k}, rng));
    params_.add(p + ".lift.b", Tensor(Shape{F}, 0.0));
    for (Index b = 0; b < cfg_.resblocks; b++) {
      auto const q = fmt::format("{}.block{}", p, b);
      params_.add(q + ".conv1.w", HeUniform({F, F, k, k}, rng));
      params_.add(q + ".conv1.b", Tensor(Shape{F}, 0.0));
      params_.add(q + ".conv2.w", HeUniform({F, F, k, k}, rng));
      params_.add(q + ".conv2.b", Tensor(Shape{F}, 0.0));
    }
    params_.add(p + ".proj.w", Tensor(Shape{2, F, k, k}, 0.0));
    params_.add(p + ".proj.b", Tensor(Shape{2}, 0.0));
  }
  if (params_.count() != cfg_.parameter_count()) {
    throw Error("generator built {} parameters, config implies {}", params_.count(), cfg_.parameter_count());
  }
}

std::vector<std::string> Generator::frozen() const
{
  std::vector<std::string> out;
  if (!cfg_.learn_step) {
    for (Index t = 0; t < cfg_.iterations; t++) {
      out.push_back(It(t) + ".alpha");
    }
  }
  return out;
}

Var Generator::forward(Var const &y, ImagingModel const &model, std::vector<Var> const &p) const
{
  if (p.size() != params_.size()) {
    throw Error("generator forward: {} parameter variables for {} parameters", p.size(), params_.size());
  }
  if (y.shape() != Shape{model.coils(), model.h(), model.w(), 2}) {
    throw Error("generator forward: k-space {} does not match model [{},{},{},2]", ShapeStr(y.shape()), model.coils(), model.h(), model.w());
  }
  auto P = [&](std::string const &name) -> Var const & { return p[params_.index(name)]; };
  double const slope = cfg_.slope;

  Var x = Adjoint(y, model);
  for (Index t = 0; t < cfg_.iterations; t++) {
    auto const it = It(t);
    Var const residual = Adjoint(Sub(Forward(x, model), y), model);
    x = Sub(x, ScaleBy(P(it + ".alpha"), residual));

    Var h = LeakyRelu(Conv2d(ToChannels(x), P(it + ".lift.w"), P(it + ".lift.b")), slope);
    for (Index b = 0; b < cfg_.resblocks; b++) {
      auto const q = fmt::format("{}.block{}", it, b);
      Var r = LeakyRelu(Conv2d(h, P(q + ".conv1.w"), P(q + ".conv1.b")), slope);
      h = Add(h, Conv2d(r, P(q + ".conv2.w"), P(q + ".conv2.b")));
    }
    x = Add(x, FromChannels(Conv2d(h, P(it + ".proj.w"), P(it + ".proj.b"))));
  }
  return x;
}

CTensor Generator::reconstruct(CTensor const &y, ImagingModel const &model) const
{
  NoGradGuard guard;
  std::vector<Var> p;
  p.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); i++) {
    p.push_back(Var::Constant(params_.at(i)));
  }
  return ToComplex(forward(Var::Constant(ToReal(y)), model, p).value());
}

} // namespace ugan
