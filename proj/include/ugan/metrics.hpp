#pragma once

#include "types.hpp"

#include <iosfwd>

namespace ugan {

// ||x - ref|| / ||ref|| on complex values
double Nrmse(CTensor const &x, CTensor const &ref);

inline constexpr double kPsnrCap = 200;
// 20 log10(max|ref| / rmse(|x|, |ref|)) on magnitudes, capped at kPsnrCap
double Psnr(CTensor const &x, CTensor const &ref);

struct SsimConfig
{
  Index window = 11;
  double sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;
};

// Mean local SSIM of two real images [H, W]. Windows are Gaussian and truncated at the image
// border, with the remaining weights renormalised to sum to one. `range` is the dynamic range L.
double Ssim(Tensor const &x, Tensor const &ref, double range, SsimConfig const &cfg = {});
// On magnitudes, with L = max|ref|
double Ssim(CTensor const &x, CTensor const &ref, SsimConfig const &cfg = {});

Tensor Magnitude(CTensor const &x);

struct Stat
{
  double mean = 0, std = 0; // sample standard deviation; 0 for a single value

  static Stat Of(std::vector<double> const &v);
};

struct MetricReport
{
  std::string method;
  Stat nrmse, psnr, ssim;
  std::vector<double> nrmse_all, psnr_all, ssim_all;

  void add(CTensor const &x, CTensor const &ref);
  void finish();
};

// Header "method,metric,mean,std", then three rows per report in the given order
void WriteReportCsv(std::ostream &os, std::vector<MetricReport> const &reports);

} // namespace ugan
