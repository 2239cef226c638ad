#include "ugan/cs/ista.hpp"

#include "ugan/cs/wavelet.hpp"
#include "ugan/metrics.hpp"

#include <cmath>

namespace ugan {

void CSConfig::validate() const
{
  if (!(lambda >= 0) || iterations < 0 || !(step > 0 && step <= 1) || levels < 0 || !(tolerance >= 0)) {
    throw Error("invalid CS config: lambda={} iterations={} step={} levels={}", lambda, iterations, step, levels);
  }
}

CTensor ZeroFilled(CTensor const &y, ImagingModel const &model) { return AdjointOp(y, model); }

double CSObjective(CTensor const &x, CTensor const &y, ImagingModel const &model, CSConfig const &cfg)
{
  CTensor const r = ForwardOp(x, model);
  double fit = 0;
  for (Index i = 0; i < r.size(); i++) {
    fit += std::norm(r[i] - y[i]);
  }
  double l1 = 0;
  if (cfg.lambda > 0) {
    CTensor const w = Dwt2(x, cfg.levels);
    for (auto c : w.vec()) {
      l1 += std::abs(c);
    }
  }
  return 0.5 * fit + cfg.lambda * l1;
}

CSResult IstaL1Wavelet(CTensor const &y, ImagingModel const &model, CSConfig const &cfg)
{
  cfg.validate();
  CSResult res;
  res.image = AdjointOp(y, model);
  res.objective.push_back(CSObjective(res.image, y, model, cfg));
  for (Index it = 0; it < cfg.iterations; it++) {
    CTensor r = ForwardOp(res.image, model);
    for (Index i = 0; i < r.size(); i++) {
      r[i] -= y[i];
    }
    CTensor const g = AdjointOp(r, model);
    CTensor z = res.image;
    for (Index i = 0; i < z.size(); i++) {
      z[i] -= cfg.step * g[i];
    }
    res.image = Idwt2(SoftThreshold(Dwt2(z, cfg.levels), cfg.step * cfg.lambda), cfg.levels);
    double const f = CSObjective(res.image, y, model, cfg);
    if (f > res.objective.back() + cfg.tolerance) {
      throw Error("ISTA objective rose from {:.12g} to {:.12g} at iteration {}", res.objective.back(), f, it + 1);
    }
    res.objective.push_back(f);
  }
  return res;
}

std::vector<double> LogGrid(double lo, double hi, Index n)
{
  if (!(lo > 0 && hi >= lo) || n < 1) {
    throw Error("log grid needs 0 < lo <= hi and n >= 1");
  }
  std::vector<double> g;
  for (Index i = 0; i < n; i++) {
    double const t = n == 1 ? 0 : static_cast<double>(i) / static_cast<double>(n - 1);
    g.push_back(lo * std::pow(hi / lo, t));
  }
  return g;
}

std::pair<double, double> TuneLambda(std::vector<CSProblem> const &val, std::vector<double> const &grid, CSConfig cfg)
{
  if (val.empty() || grid.empty()) {
    throw Error("lambda search needs validation problems and a grid");
  }
  std::pair<double, double> best{grid.front(), std::numeric_limits<double>::infinity()};
  for (double lambda : grid) {
    cfg.lambda = lambda;
    double e = 0;
    for (auto const &p : val) {
      e += Nrmse(IstaL1Wavelet(p.y, p.model, cfg).image, p.truth);
    }
    e /= static_cast<double>(val.size());
    if (e < best.second) {
      best = {lambda, e};
    }
  }
  return best;
}

} // namespace ugan
