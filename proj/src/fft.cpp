#include "ugan/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace ugan {

namespace {

// FFTW plan creation is not thread-safe; execution of an existing plan on new arrays is.
struct PlanCache
{
  std::mutex mtx;
  std::map<std::tuple<Index, Index, int>, fftw_plan> plans;

  fftw_plan get(Index h, Index w, int sign)
  {
    std::lock_guard lock(mtx);
    auto key = std::make_tuple(h, w, sign);
    if (auto it = plans.find(key); it != plans.end()) {
      return it->second;
    }
    std::vector<Cx> scratch(static_cast<std::size_t>(h * w));
    auto *p = reinterpret_cast<fftw_complex *>(scratch.data());
    // FFTW_ESTIMATE keeps plans (and therefore results) independent of timing
    fftw_plan plan = fftw_plan_dft_2d(
      static_cast<int>(h), static_cast<int>(w), p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, plan);
    return plan;
  }

  ~PlanCache()
  {
    for (auto &kv : plans) {
      fftw_destroy_plan(kv.second);
    }
  }
};

PlanCache &Cache()
{
  static PlanCache cache;
  return cache;
}

// Circular shift by floor(n/2) along each axis (fftshift); ifftshift shifts by ceil(n/2).
void Shift(std::span<Cx> img, Index h, Index w, bool inverse)
{
  Index const sy = inverse ? (h + 1) / 2 : h / 2;
  Index const sx = inverse ? (w + 1) / 2 : w / 2;
  if (sy == 0 && sx == 0) {
    return;
  }
  std::vector<Cx> tmp(img.begin(), img.end());
  for (Index y = 0; y < h; y++) {
    Index const ty = (y + sy) % h;
    for (Index x = 0; x < w; x++) {
      img[ty * w + (x + sx) % w] = tmp[y * w + x];
    }
  }
}

void Transform(std::span<Cx> img, Index h, Index w, int sign)
{
  // centered transform: fftshift(F(ifftshift(x)))
  Shift(img, h, w, true);
  auto *p = reinterpret_cast<fftw_complex *>(img.data());
  fftw_execute_dft(Cache().get(h, w, sign), p, p);
  Shift(img, h, w, false);
  double const scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (auto &v : img) {
    v *= scale;
  }
}

CTensor Batched(CTensor const &x, int sign)
{
  if (x.rank() < 2) {
    throw Error("fft2c needs at least 2 dimensions, got {}", ShapeStr(x.shape()));
  }
  Index const h = x.dim(x.shape().size() - 2);
  Index const w = x.shape().back();
  CTensor out = x;
  Index const n = h * w;
  for (Index b = 0; b < out.size() / std::max<Index>(n, 1); b++) {
    Transform(out.span().subspan(static_cast<std::size_t>(b * n), static_cast<std::size_t>(n)), h, w, sign);
  }
  return out;
}

} // namespace

void fft2c_inplace(std::span<Cx> img, Index h, Index w) { Transform(img, h, w, FFTW_FORWARD); }
void ifft2c_inplace(std::span<Cx> img, Index h, Index w) { Transform(img, h, w, FFTW_BACKWARD); }

CTensor fft2c(CTensor const &x) { return Batched(x, FFTW_FORWARD); }
CTensor ifft2c(CTensor const &x) { return Batched(x, FFTW_BACKWARD); }

} // namespace ugan
