#include "ugan/data/phantom.hpp"

#include <cmath>
#include <numbers>

namespace ugan {

void PhantomSpec::validate() const
{
  if (h < 2 || w < 2 || coils < 1) {
    throw Error("phantom spec: need h,w >= 2 and coils >= 1, got {}x{} with {} coils", h, w, coils);
  }
  if (min_ellipses < 1 || max_ellipses < min_ellipses) {
    throw Error("phantom spec: ellipse range [{}, {}] is invalid", min_ellipses, max_ellipses);
  }
  if (phase_order < 0 || noise_sigma < 0 || n_train < 0 || n_test < 0 || wavelet_levels < 0) {
    throw Error("phantom spec: negative phase order, noise, split size or wavelet levels");
  }
  Index const block = Index{1} << wavelet_levels;
  if (h % block != 0 || w % block != 0) {
    throw Error("phantom spec: {}x{} is not divisible by 2^{} = {}", h, w, wavelet_levels, block);
  }
  masks().validate();
}

PhantomSpec PhantomPreset(std::string const &name)
{
  PhantomSpec s;
  if (name == "desk") {
    return s;
  }
  if (name == "knee") {
    s.h = s.w = 320;
    s.coils = 8;
    s.calib_h = s.calib_w = 20;
    return s;
  }
  if (name == "dce") {
    s.h = 192;
    s.w = 180;
    s.coils = 8;
    s.calib_h = s.calib_w = 16;
    s.wavelet_levels = 2;
    return s;
  }
  throw Error("unknown phantom preset '{}' (desk, knee, dce)", name);
}

CTensor MakePhantom(Rng &rng, PhantomSpec const &spec)
{
  spec.validate();
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };

  Index const n = std::uniform_int_distribution<Index>(spec.min_ellipses, spec.max_ellipses)(rng);
  struct Ellipse
  {
    double cy, cx, ay, ax, c, s, mag;
  };
  std::vector<Ellipse> es;
  for (Index i = 0; i < n; i++) {
    Ellipse e;
    if (i == 0) {
      // body outline
      e.cy = uni(-0.1, 0.1);
      e.cx = uni(-0.1, 0.1);
      e.ay = uni(0.6, 0.85);
      e.ax = uni(0.6, 0.85);
    } else {
      e.cy = uni(-0.5, 0.5);
      e.cx = uni(-0.5, 0.5);
      e.ay = uni(0.08, 0.4);
      e.ax = uni(0.08, 0.4);
    }
    double const th = uni(0, std::numbers::pi);
    e.c = std::cos(th);
    e.s = std::sin(th);
    e.mag = uni(0.2, 1.0);
    es.push_back(e);
  }

  // coefficients of sum_{i+j <= order} a_ij y^i x^j
  std::vector<std::pair<Index, Index>> terms;
  for (Index i = 0; i <= spec.phase_order; i++) {
    for (Index j = 0; i + j <= spec.phase_order; j++) {
      terms.emplace_back(i, j);
    }
  }
  std::vector<double> coef;
  for (auto const &[i, j] : terms) {
    coef.push_back(uni(-1, 1) * std::numbers::pi / static_cast<double>(1 + i + j));
  }
  if (spec.phase_order == 0) {
    coef.assign(coef.size(), 0.0);
  }

  CTensor img(Shape{spec.h, spec.w});
  for (Index y = 0; y < spec.h; y++) {
    double const py = 2.0 * (static_cast<double>(y) + 0.5) / static_cast<double>(spec.h) - 1.0;
    for (Index x = 0; x < spec.w; x++) {
      double const px = 2.0 * (static_cast<double>(x) + 0.5) / static_cast<double>(spec.w) - 1.0;
      double m = 0;
      for (auto const &e : es) {
        double const dy = py - e.cy, dx = px - e.cx;
        double const u = (e.c * dx + e.s * dy) / e.ax, v = (-e.s * dx + e.c * dy) / e.ay;
        if (u * u + v * v <= 1) {
          m += e.mag;
        }
      }
      m = std::clamp(m, 0.0, 1.0);
      double phi = 0;
      for (std::size_t t = 0; t < terms.size(); t++) {
        phi += coef[t] * std::pow(py, static_cast<double>(terms[t].first)) * std::pow(px, static_cast<double>(terms[t].second));
      }
      img(y, x) = std::polar(m, phi);
    }
  }
  return img;
}

void NormalizeMaps(CTensor &s)
{
  Index const C = s.dim(0), n = s.dim(1) * s.dim(2);
  for (Index i = 0; i < n; i++) {
    double rss = 0;
    for (Index c = 0; c < C; c++) {
      rss += std::norm(s[c * n + i]);
    }
    rss = std::sqrt(rss);
    if (rss == 0) {
      throw Error("coil maps vanish at pixel {}", i);
    }
    for (Index c = 0; c < C; c++) {
      s[c * n + i] /= rss;
    }
  }
}

CoilMaps MakeCoilmaps(Rng &rng, Index coils, Index h, Index w)
{
  if (coils < 1) {
    throw Error("need at least one coil, got {}", coils);
  }
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double const offset = U(rng) * 2 * std::numbers::pi;
  CTensor s(Shape{coils, h, w});
  for (Index c = 0; c < coils; c++) {
    double const th = offset + 2 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils);
    double const cy = 1.2 * std::sin(th), cx = 1.2 * std::cos(th);
    double const width = 0.7 + 0.3 * U(rng);
    double const gy = (U(rng) - 0.5) * std::numbers::pi, gx = (U(rng) - 0.5) * std::numbers::pi;
    double const phase0 = U(rng) * 2 * std::numbers::pi;
    for (Index y = 0; y < h; y++) {
      double const py = 2.0 * (static_cast<double>(y) + 0.5) / static_cast<double>(h) - 1.0;
      for (Index x = 0; x < w; x++) {
        double const px = 2.0 * (static_cast<double>(x) + 0.5) / static_cast<double>(w) - 1.0;
        double const d2 = (py - cy) * (py - cy) + (px - cx) * (px - cx);
        s(c, y, x) = std::polar(std::exp(-d2 / (2 * width * width)), phase0 + gy * py + gx * px);
      }
    }
  }
  NormalizeMaps(s);
  return CoilMaps{std::move(s), {}};
}

} // namespace ugan
