#pragma once

#include "../mri/model.hpp"

namespace ugan {

struct CSConfig
{
  double lambda = 0.01;
  Index iterations = 100;
  double step = 1.0; // at most 1/||A||^2, which is 1 for normalised maps
  Index levels = 3;
  double tolerance = 1e-9; // allowed objective increase per iteration

  void validate() const;
};

struct CSResult
{
  CTensor image;
  std::vector<double> objective; // at x0 and after every iteration
};

// A^H y
CTensor ZeroFilled(CTensor const &y, ImagingModel const &model);

// 1/2 ||Ax - y||^2 + lambda ||Psi x||_1
double CSObjective(CTensor const &x, CTensor const &y, ImagingModel const &model, CSConfig const &cfg);

// ISTA for the L1-wavelet problem from x0 = A^H y:
//   x <- Idwt2(SoftThreshold(Dwt2(x - step A^H(Ax - y)), step lambda))
// Throws if the objective rises by more than cfg.tolerance in any iteration.
CSResult IstaL1Wavelet(CTensor const &y, ImagingModel const &model, CSConfig const &cfg);

struct CSProblem
{
  CTensor y;
  ImagingModel model;
  CTensor truth;
};

// Best lambda on a log grid by mean NRMSE over validation problems; returns (lambda, nrmse)
std::pair<double, double> TuneLambda(std::vector<CSProblem> const &val, std::vector<double> const &grid, CSConfig cfg);
std::vector<double> LogGrid(double lo, double hi, Index n);

} // namespace ugan
