#pragma once

#include "ugan/ad.hpp"
#include "ugan/mri/model.hpp"
#include "ugan/train/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace ugan::test {

inline Tensor RandTensor(Shape s, Rng &rng, double lo = -1, double hi = 1)
{
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(s));
  for (auto &v : t.vec()) {
    v = u(rng);
  }
  return t;
}

inline CTensor RandCTensor(Shape s, Rng &rng)
{
  std::normal_distribution<double> n;
  CTensor t(std::move(s));
  for (auto &v : t.vec()) {
    v = Cx(n(rng), n(rng));
  }
  return t;
}

inline double MaxAbsDiff(std::span<double const> a, std::span<double const> b)
{
  double m = 0;
  for (std::size_t i = 0; i < a.size(); i++) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

inline double MaxAbsDiff(CTensor const &a, CTensor const &b)
{
  double m = 0;
  for (Index i = 0; i < a.size(); i++) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// Relative error between analytic and central-difference gradients, ||g - fd|| / max(||fd||, floor)
struct FdResult
{
  double rel = 0;
  double norm = 0;
};

using ScalarFn = std::function<ad::Var(std::vector<ad::Var> const &)>;

// Checks the gradient of f with respect to every input, perturbing each coordinate by +-h
inline FdResult FdCheck(ScalarFn const &f, std::vector<Tensor> const &inputs, double h = 1e-5, double floor = 1e-6)
{
  std::vector<ad::Var> leaves;
  for (auto const &t : inputs) {
    leaves.push_back(ad::Var::Leaf(t));
  }
  auto const grads = ad::Grad(f(leaves), leaves);

  // Leaves rather than constants, so functions that differentiate internally still see a graph
  auto eval = [&](std::vector<Tensor> const &xs) {
    std::vector<ad::Var> c;
    for (auto const &t : xs) {
      c.push_back(ad::Var::Leaf(t));
    }
    return f(c).item();
  };

  double num = 0, den = 0;
  auto xs = inputs;
  for (std::size_t k = 0; k < xs.size(); k++) {
    for (Index i = 0; i < xs[k].size(); i++) {
      double const x0 = xs[k][i];
      xs[k][i] = x0 + h;
      double const fp = eval(xs);
      xs[k][i] = x0 - h;
      double const fm = eval(xs);
      xs[k][i] = x0;
      double const fd = (fp - fm) / (2 * h);
      num += std::pow(grads[k].value()[i] - fd, 2);
      den += fd * fd;
    }
  }
  return {std::sqrt(num) / std::max(std::sqrt(den), floor), std::sqrt(den)};
}

// Random ImagingModel: random mask density, random complex maps normalised to a partition of unity
ImagingModel RandomModel(Index coils, Index h, Index w, Rng &rng, double keep = 0.4);

// One finite-difference case per differentiable operation
struct OpCase
{
  std::string name;
  ScalarFn f;
  std::vector<Tensor> in;
};
std::vector<OpCase> OpCases(Rng &rng);
// Paths that differentiate through a create_graph gradient
std::vector<OpCase> SecondOrderCases(Rng &rng);

// Metric formulas evaluated pixel by pixel, as oracles for the library versions
double SsimBrute(Tensor const &x, Tensor const &y, double L);
double NrmseBrute(CTensor const &x, CTensor const &r);
double PsnrBrute(CTensor const &x, CTensor const &r);

// Upper tail of the chi-square distribution with 4 degrees of freedom
double ChiSquare4Tail(double x);

// Statistics of the fresh operators drawn during unsupervised training
struct FreshStats
{
  Index draws = 0, differing = 0;
  std::array<Index, 5> bins{}; // target acceleration, 5 equal-width bins over [r_min, r_max]
  double chi2 = 0, p = 0;
  // mean fraction of k-space points where the fresh and input masks agree, its prediction
  // from the per-point sampling densities under independence, and the standard error
  double agree = 0, predicted = 0, sigma = 0;
};
FreshStats AnalyseFresh(std::vector<FreshDraw> const &draws, MaskDistribution const &dist);

} // namespace ugan::test
