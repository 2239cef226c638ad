#include "ugan/metrics.hpp"

#include <array>
#include <cmath>
#include <ostream>

namespace ugan {

namespace {
template <typename A, typename B>
void SameShape(A const &x, B const &ref, char const *what)
{
  if (x.shape() != ref.shape()) {
    throw Error("{}: shapes {} and {} differ", what, ShapeStr(x.shape()), ShapeStr(ref.shape()));
  }
}
} // namespace

double Nrmse(CTensor const &x, CTensor const &ref)
{
  SameShape(x, ref, "nrmse");
  double const den = Norm(ref.span());
  if (den == 0) {
    throw Error("nrmse: reference has zero norm");
  }
  double num = 0;
  for (Index i = 0; i < x.size(); i++) {
    num += std::norm(x[i] - ref[i]);
  }
  return std::sqrt(num) / den;
}

Tensor Magnitude(CTensor const &x)
{
  Tensor m(x.shape());
  for (Index i = 0; i < x.size(); i++) {
    m[i] = std::abs(x[i]);
  }
  return m;
}

double Psnr(CTensor const &x, CTensor const &ref)
{
  SameShape(x, ref, "psnr");
  double peak = 0, mse = 0;
  for (Index i = 0; i < x.size(); i++) {
    double const r = std::abs(ref[i]);
    double const d = std::abs(x[i]) - r;
    peak = std::max(peak, r);
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0) {
    return kPsnrCap;
  }
  return std::min(kPsnrCap, 20 * std::log10(peak / std::sqrt(mse)));
}

double Ssim(Tensor const &x, Tensor const &ref, double range, SsimConfig const &cfg)
{
  SameShape(x, ref, "ssim");
  if (x.rank() != 2) {
    throw Error("ssim expects 2-D images, got {}", ShapeStr(x.shape()));
  }
  if (cfg.window < 1 || cfg.window % 2 == 0) {
    throw Error("ssim window must be odd, got {}", cfg.window);
  }
  Index const H = x.dim(0), W = x.dim(1), r = cfg.window / 2;
  std::vector<double> g(static_cast<std::size_t>(cfg.window));
  for (Index i = -r; i <= r; i++) {
    g[i + r] = std::exp(-static_cast<double>(i * i) / (2 * cfg.sigma * cfg.sigma));
  }
  double const c1 = std::pow(cfg.k1 * range, 2), c2 = std::pow(cfg.k2 * range, 2);

  // Separable weighted sums of x, y, x^2, y^2, xy; the truncated window's total weight is the
  // product of its row and column sums.
  std::array<Tensor, 5> in{x, ref, Tensor(x.shape()), Tensor(x.shape()), Tensor(x.shape())};
  for (Index i = 0; i < x.size(); i++) {
    in[2][i] = x[i] * x[i];
    in[3][i] = ref[i] * ref[i];
    in[4][i] = x[i] * ref[i];
  }
  auto norm1 = [&](Index p, Index n) {
    double s = 0;
    for (Index d = -r; d <= r; d++) {
      if (p + d >= 0 && p + d < n) {
        s += g[d + r];
      }
    }
    return s;
  };
  std::array<Tensor, 5> out;
  for (int k = 0; k < 5; k++) {
    Tensor tmp(x.shape(), 0.0);
    for (Index yy = 0; yy < H; yy++) {
      for (Index xx = 0; xx < W; xx++) {
        double s = 0;
        for (Index d = -r; d <= r; d++) {
          if (xx + d >= 0 && xx + d < W) {
            s += g[d + r] * in[k](yy, xx + d);
          }
        }
        tmp(yy, xx) = s / norm1(xx, W);
      }
    }
    out[k] = Tensor(x.shape(), 0.0);
    for (Index yy = 0; yy < H; yy++) {
      double const n = norm1(yy, H);
      for (Index xx = 0; xx < W; xx++) {
        double s = 0;
        for (Index d = -r; d <= r; d++) {
          if (yy + d >= 0 && yy + d < H) {
            s += g[d + r] * tmp(yy + d, xx);
          }
        }
        out[k](yy, xx) = s / n;
      }
    }
  }
  double total = 0;
  for (Index i = 0; i < x.size(); i++) {
    double const mx = out[0][i], my = out[1][i];
    double const vx = out[2][i] - mx * mx, vy = out[3][i] - my * my, cxy = out[4][i] - mx * my;
    total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(x.size());
}

double Ssim(CTensor const &x, CTensor const &ref, SsimConfig const &cfg)
{
  SameShape(x, ref, "ssim");
  Tensor const a = Magnitude(x), b = Magnitude(ref);
  double peak = 0;
  for (auto v : b.vec()) {
    peak = std::max(peak, v);
  }
  return Ssim(a, b, peak, cfg);
}

Stat Stat::Of(std::vector<double> const &v)
{
  Stat s;
  if (v.empty()) {
    return s;
  }
  for (auto x : v) {
    s.mean += x;
  }
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (auto x : v) {
      ss += (x - s.mean) * (x - s.mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

void MetricReport::add(CTensor const &x, CTensor const &ref)
{
  nrmse_all.push_back(Nrmse(x, ref));
  psnr_all.push_back(Psnr(x, ref));
  ssim_all.push_back(Ssim(x, ref));
}

void MetricReport::finish()
{
  nrmse = Stat::Of(nrmse_all);
  psnr = Stat::Of(psnr_all);
  ssim = Stat::Of(ssim_all);
}

void WriteReportCsv(std::ostream &os, std::vector<MetricReport> const &reports)
{
  os << "method,metric,mean,std\n";
  for (auto const &r : reports) {
    os << fmt::format("{},nrmse,{:.10g},{:.10g}\n", r.method, r.nrmse.mean, r.nrmse.std);
    os << fmt::format("{},psnr,{:.10g},{:.10g}\n", r.method, r.psnr.mean, r.psnr.std);
    os << fmt::format("{},ssim,{:.10g},{:.10g}\n", r.method, r.ssim.mean, r.ssim.std);
  }
}

} // namespace ugan
