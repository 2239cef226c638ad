#include "ugan/cs/wavelet.hpp"

#include <cmath>
#include <numbers>

namespace ugan {

namespace {

void Check(CTensor const &x, Index levels)
{
  if (x.rank() != 2) {
    throw Error("wavelet transform expects [H, W], got {}", ShapeStr(x.shape()));
  }
  if (levels < 0) {
    throw Error("negative wavelet level count {}", levels);
  }
  Index const b = Index{1} << levels;
  if (x.dim(0) % b != 0 || x.dim(1) % b != 0) {
    throw Error("{}x{} is not divisible by 2^{} for a {}-level wavelet transform", x.dim(0), x.dim(1), levels, levels);
  }
}

double constexpr kS = std::numbers::sqrt2 / 2;

// One analysis step on the top-left h x w block, rows then columns
void Analyse(CTensor &a, Index h, Index w)
{
  Index const W = a.dim(1);
  std::vector<Cx> tmp(static_cast<std::size_t>(std::max(h, w)));
  for (Index y = 0; y < h; y++) {
    for (Index i = 0; i < w / 2; i++) {
      Cx const p = a[y * W + 2 * i], q = a[y * W + 2 * i + 1];
      tmp[i] = kS * (p + q);
      tmp[w / 2 + i] = kS * (p - q);
    }
    std::copy(tmp.begin(), tmp.begin() + w, a.data() + y * W);
  }
  for (Index x = 0; x < w; x++) {
    for (Index i = 0; i < h / 2; i++) {
      Cx const p = a[2 * i * W + x], q = a[(2 * i + 1) * W + x];
      tmp[i] = kS * (p + q);
      tmp[h / 2 + i] = kS * (p - q);
    }
    for (Index y = 0; y < h; y++) {
      a[y * W + x] = tmp[y];
    }
  }
}

void Synthesise(CTensor &a, Index h, Index w)
{
  Index const W = a.dim(1);
  std::vector<Cx> tmp(static_cast<std::size_t>(std::max(h, w)));
  for (Index x = 0; x < w; x++) {
    for (Index i = 0; i < h / 2; i++) {
      Cx const s = a[i * W + x], d = a[(h / 2 + i) * W + x];
      tmp[2 * i] = kS * (s + d);
      tmp[2 * i + 1] = kS * (s - d);
    }
    for (Index y = 0; y < h; y++) {
      a[y * W + x] = tmp[y];
    }
  }
  for (Index y = 0; y < h; y++) {
    for (Index i = 0; i < w / 2; i++) {
      Cx const s = a[y * W + i], d = a[y * W + w / 2 + i];
      tmp[2 * i] = kS * (s + d);
      tmp[2 * i + 1] = kS * (s - d);
    }
    std::copy(tmp.begin(), tmp.begin() + w, a.data() + y * W);
  }
}

} // namespace

CTensor Dwt2(CTensor const &x, Index levels)
{
  Check(x, levels);
  CTensor a = x;
  for (Index l = 0; l < levels; l++) {
    Analyse(a, x.dim(0) >> l, x.dim(1) >> l);
  }
  return a;
}

CTensor Idwt2(CTensor const &c, Index levels)
{
  Check(c, levels);
  CTensor a = c;
  for (Index l = levels - 1; l >= 0; l--) {
    Synthesise(a, c.dim(0) >> l, c.dim(1) >> l);
  }
  return a;
}

Cx SoftThreshold(Cx c, double tau)
{
  if (tau < 0) {
    throw Error("soft threshold needs tau >= 0, got {}", tau);
  }
  double const m = std::abs(c);
  if (m <= tau) {
    return 0;
  }
  return c * ((m - tau) / m);
}

CTensor SoftThreshold(CTensor const &c, double tau)
{
  CTensor out(c.shape());
  for (Index i = 0; i < c.size(); i++) {
    out[i] = SoftThreshold(c[i], tau);
  }
  return out;
}

} // namespace ugan
