#include "support.hpp"

#include "ugan/data/phantom.hpp"

namespace ugan::test {

using namespace ad;

namespace {

Var C(Tensor t) { return Var::Constant(std::move(t)); }

} // namespace

ImagingModel RandomModel(Index coils, Index h, Index w, Rng &rng, double keep)
{
  std::bernoulli_distribution b(keep);
  SamplingMask m;
  m.bits = Tensor({h, w});
  for (auto &v : m.bits.vec()) {
    v = b(rng) ? 1 : 0;
  }
  m.target_r = 1 / keep;
  CoilMaps maps;
  maps.s = RandCTensor({coils, h, w}, rng);
  NormalizeMaps(maps.s);
  return ImagingModel(m, maps);
}

std::vector<OpCase> OpCases(Rng &rng)
{
  auto const proj = [&](Shape s) { return C(RandTensor(std::move(s), rng)); };
  auto const away = [&](Shape s) { return RandTensor(std::move(s), rng, 0.3, 1.5); };
  auto const model = RandomModel(2, 4, 6, rng);
  auto const rHW = proj({4, 6, 2}), rCHW = proj({2, 4, 6, 2}), r3 = proj({3, 4, 4}), r3s = proj({3, 2, 2});
  auto const r4 = proj({4}), r42 = proj({4, 2}), r2x = proj({2, 4, 4}), rc = proj({3}), rcc = proj({3, 3, 3});
  return {
    {"add", [=](auto const &v) { return Dot(Add(v[0], v[1]), C(r4.value())); }, {RandTensor({4}, rng), RandTensor({4}, rng)}},
    {"sub", [=](auto const &v) { return Dot(Sub(v[0], v[1]), C(r4.value())); }, {RandTensor({4}, rng), RandTensor({4}, rng)}},
    {"mul", [=](auto const &v) { return Dot(Mul(v[0], v[1]), C(r4.value())); }, {RandTensor({4}, rng), RandTensor({4}, rng)}},
    {"neg/scale/addconst", [=](auto const &v) { return Dot(AddConst(Scale(Neg(v[0]), 1.7), 2), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"sin", [=](auto const &v) { return Dot(Sin(v[0]), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"cos", [=](auto const &v) { return Dot(Cos(v[0]), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"sqrt", [=](auto const &v) { return Dot(Sqrt(v[0]), C(r4.value())); }, {away({4})}},
    {"reciprocal", [=](auto const &v) { return Dot(Reciprocal(v[0]), C(r4.value())); }, {away({4})}},
    {"abs", [=](auto const &v) { return Dot(Abs(v[0]), C(r4.value())); }, {away({4})}},
    {"square", [=](auto const &v) { return Dot(Square(v[0]), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"leaky_relu", [=](auto const &v) { return Dot(LeakyRelu(v[0], 0.2), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"sum/mean", [=](auto const &v) { return Mul(Sum(v[0]), Mean(Square(v[0]))); }, {RandTensor({4}, rng)}},
    {"expand/scale_by", [=](auto const &v) { return Dot(ScaleBy(v[0], Expand(v[0], {4})), C(r4.value())); }, {RandTensor({}, rng)}},
    {"reshape", [=](auto const &v) { return Dot(Reshape(v[0], {4, 2}), C(r42.value())); }, {RandTensor({2, 4}, rng)}},
    {"tile/sum_lead", [=](auto const &v) { return Dot(SumLead(Mul(Tile(v[0], 3), Tile(v[0], 3))), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"widen/pair_sum", [=](auto const &v) { return Dot(PairSum(Mul(Widen(v[0]), C(r42.value()))), C(r4.value())); }, {RandTensor({4}, rng)}},
    {"channel_sum", [=](auto const &v) { return Dot(ChannelSum(Square(v[0])), C(rc.value())); }, {RandTensor({3, 3, 3}, rng)}},
    {"channel_broadcast", [=](auto const &v) { return Dot(ChannelBroadcast(v[0], 3, 3), C(rcc.value())); }, {RandTensor({3}, rng)}},
    {"add_bias", [=](auto const &v) { return Dot(Square(AddBias(v[0], v[1])), C(rcc.value())); }, {RandTensor({3, 3, 3}, rng), RandTensor({3}, rng)}},
    {"spatial_mean", [=](auto const &v) { return Dot(SpatialMean(Square(v[0])), C(rc.value())); }, {RandTensor({3, 3, 3}, rng)}},
    {"conv2d stride 1", [=](auto const &v) { return Dot(Conv2d(v[0], v[1], v[2]), C(r3.value())); },
      {RandTensor({2, 4, 4}, rng), RandTensor({3, 2, 3, 3}, rng), RandTensor({3}, rng)}},
    {"conv2d stride 2", [=](auto const &v) { return Dot(Conv2d(v[0], v[1], 2), C(r3s.value())); },
      {RandTensor({2, 4, 4}, rng), RandTensor({3, 2, 3, 3}, rng)}},
    {"conv_input_grad", [=](auto const &v) { return Dot(ConvInputGrad(v[0], v[1], 2, 4, 4), C(r2x.value())); },
      {RandTensor({3, 2, 2}, rng), RandTensor({3, 2, 3, 3}, rng)}},
    {"conv_weight_grad", [=](auto const &v) { return Sum(Square(ConvWeightGrad(v[0], v[1], 1, 3))); },
      {RandTensor({2, 4, 4}, rng), RandTensor({3, 4, 4}, rng)}},
    {"cmul/conj", [=](auto const &v) { return Dot(CMul(v[0], Conj(v[1])), C(r42.value())); }, {RandTensor({4, 2}, rng), RandTensor({4, 2}, rng)}},
    {"magnitude", [=](auto const &v) { return Dot(Magnitude(v[0]), C(r4.value())); }, {away({4, 2})}},
    {"csquare", [=](auto const &v) { return Dot(CSquare(v[0]), C(r42.value())); }, {RandTensor({4, 2}, rng)}},
    {"fft2c", [=](auto const &v) { return Dot(Fft2c(v[0]), C(rHW.value())); }, {RandTensor({4, 6, 2}, rng)}},
    {"ifft2c", [=](auto const &v) { return Dot(Ifft2c(v[0]), C(rHW.value())); }, {RandTensor({4, 6, 2}, rng)}},
    {"to/from channels", [=](auto const &v) { return Dot(FromChannels(Square(ToChannels(v[0]))), C(rHW.value())); }, {RandTensor({4, 6, 2}, rng)}},
    {"forward_op", [=](auto const &v) { return Dot(Forward(v[0], model), C(rCHW.value())); }, {RandTensor({4, 6, 2}, rng)}},
    {"adjoint_op", [=](auto const &v) { return Dot(Adjoint(v[0], model), C(rHW.value())); }, {RandTensor({2, 4, 6, 2}, rng)}},
    {"normal operator, quadratic", [=](auto const &v) { return Sum(Square(Forward(Adjoint(Forward(v[0], model), model), model))); },
      {RandTensor({4, 6, 2}, rng)}},
  };
}

std::vector<OpCase> SecondOrderCases(Rng &rng)
{
  auto const rw = C(RandTensor({3, 2, 3, 3}, rng));
  auto const r3 = C(RandTensor({3, 4, 4}, rng));
  auto const model = RandomModel(2, 4, 4, rng);
  std::vector<OpCase> out;
  // h(x, w) = || d/dx <sin(lrelu(conv(x, w))), r> ||^2 + <grad_w, rw>
  out.push_back({"conv and leaky relu",
    [=](std::vector<Var> const &v) {
      auto const inner = Dot(Sin(LeakyRelu(Conv2d(v[0], v[1]), 0.2)), r3);
      auto const g = Grad(inner, {v[0], v[1]}, true);
      return Add(Sum(Square(g[0])), Dot(g[1], rw));
    },
    {RandTensor({2, 4, 4}, rng), RandTensor({3, 2, 3, 3}, rng)}});
  out.push_back({"magnitude of the forward operator",
    [=](std::vector<Var> const &v) {
      auto const inner = Sum(Magnitude(Forward(v[0], model)));
      return Sum(Square(Grad(inner, {v[0]}, true)[0]));
    },
    {RandTensor({4, 4, 2}, rng)}});
  return out;
}

// Mean SSIM, one pixel at a time with a 2-D truncated Gaussian window
double SsimBrute(Tensor const &x, Tensor const &y, double L)
{
  Index const H = x.dim(0), W = x.dim(1), r = 5;
  double const s = 1.5, c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  double total = 0;
  for (Index i = 0; i < H; i++) {
    for (Index j = 0; j < W; j++) {
      double wsum = 0, mx = 0, my = 0;
      for (Index u = -r; u <= r; u++) {
        for (Index v = -r; v <= r; v++) {
          if (i + u < 0 || i + u >= H || j + v < 0 || j + v >= W) {
            continue;
          }
          double const w = std::exp(-(u * u + v * v) / (2 * s * s));
          wsum += w;
          mx += w * x(i + u, j + v);
          my += w * y(i + u, j + v);
        }
      }
      mx /= wsum;
      my /= wsum;
      double vx = 0, vy = 0, cxy = 0;
      for (Index u = -r; u <= r; u++) {
        for (Index v = -r; v <= r; v++) {
          if (i + u < 0 || i + u >= H || j + v < 0 || j + v >= W) {
            continue;
          }
          double const w = std::exp(-(u * u + v * v) / (2 * s * s)) / wsum;
          double const dx = x(i + u, j + v) - mx, dy = y(i + u, j + v) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cxy += w * dx * dy;
        }
      }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>(H * W);
}

double NrmseBrute(CTensor const &x, CTensor const &r)
{
  double num = 0, den = 0;
  for (Index i = 0; i < x.size(); i++) {
    num += std::pow(x[i].real() - r[i].real(), 2) + std::pow(x[i].imag() - r[i].imag(), 2);
    den += std::pow(r[i].real(), 2) + std::pow(r[i].imag(), 2);
  }
  return std::sqrt(num / den);
}

double PsnrBrute(CTensor const &x, CTensor const &r)
{
  double peak = 0, se = 0;
  for (Index i = 0; i < x.size(); i++) {
    peak = std::max(peak, std::hypot(r[i].real(), r[i].imag()));
    se += std::pow(std::hypot(x[i].real(), x[i].imag()) - std::hypot(r[i].real(), r[i].imag()), 2);
  }
  return 10 * std::log10(peak * peak / (se / static_cast<double>(x.size())));
}

double ChiSquare4Tail(double x) { return x <= 0 ? 1 : std::exp(-x / 2) * (1 + x / 2); }

FreshStats AnalyseFresh(std::vector<FreshDraw> const &draws, MaskDistribution const &dist)
{
  FreshStats s;
  s.draws = static_cast<Index>(draws.size());
  if (s.draws < 2) {
    throw Error("need at least two fresh draws, got {}", s.draws);
  }
  Index const n = draws[0].fresh.bits.size();
  std::vector<double> p_in(static_cast<std::size_t>(n)), p_fr(static_cast<std::size_t>(n)), agree;
  double const width = (dist.r_max - dist.r_min) / 5;
  for (auto const &d : draws) {
    s.differing += d.fresh.bits != d.input.bits;
    if (width > 0) {
      auto const b = std::clamp<Index>(static_cast<Index>((d.fresh.target_r - dist.r_min) / width), 0, 4);
      s.bins[static_cast<std::size_t>(b)]++;
    }
    Index same = 0;
    for (Index i = 0; i < n; i++) {
      double const a = d.input.bits[i], f = d.fresh.bits[i];
      p_in[i] += a;
      p_fr[i] += f;
      same += a == f;
    }
    agree.push_back(static_cast<double>(same) / static_cast<double>(n));
  }
  double const N = static_cast<double>(s.draws);
  if (width > 0) {
    for (auto const c : s.bins) {
      s.chi2 += std::pow(static_cast<double>(c) - N / 5, 2) / (N / 5);
    }
    s.p = ChiSquare4Tail(s.chi2);
  } else {
    s.p = 1;
  }
  for (Index i = 0; i < n; i++) {
    double const a = p_in[i] / N, f = p_fr[i] / N;
    s.predicted += a * f + (1 - a) * (1 - f);
  }
  s.predicted /= static_cast<double>(n);
  for (auto const a : agree) {
    s.agree += a;
  }
  s.agree /= N;
  double var = 0;
  for (auto const a : agree) {
    var += (a - s.agree) * (a - s.agree);
  }
  s.sigma = std::sqrt(var / (N - 1) / N);
  return s;
}

} // namespace ugan::test
