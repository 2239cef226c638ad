#include "ugan/types.hpp"

#include <cmath>

namespace ugan {

Tensor ToReal(CTensor const &c)
{
  Shape s = c.shape();
  s.push_back(2);
  Tensor t(s);
  for (Index i = 0; i < c.size(); i++) {
    t[2 * i] = c[i].real();
    t[2 * i + 1] = c[i].imag();
  }
  return t;
}

CTensor ToComplex(Tensor const &t)
{
  if (t.rank() == 0 || t.shape().back() != 2) {
    throw Error("ToComplex needs a trailing dimension of 2, got {}", ShapeStr(t.shape()));
  }
  Shape s(t.shape().begin(), t.shape().end() - 1);
  CTensor c(s);
  for (Index i = 0; i < c.size(); i++) {
    c[i] = Cx(t[2 * i], t[2 * i + 1]);
  }
  return c;
}

double Norm(std::span<Cx const> x)
{
  double s = 0;
  for (auto const &v : x) {
    s += std::norm(v);
  }
  return std::sqrt(s);
}

double Norm(std::span<double const> x)
{
  double s = 0;
  for (auto v : x) {
    s += v * v;
  }
  return std::sqrt(s);
}

Cx Dot(std::span<Cx const> a, std::span<Cx const> b)
{
  if (a.size() != b.size()) {
    throw Error("Dot: size mismatch {} vs {}", a.size(), b.size());
  }
  Cx s{0, 0};
  for (std::size_t i = 0; i < a.size(); i++) {
    s += std::conj(a[i]) * b[i];
  }
  return s;
}

bool AllFinite(std::span<double const> x)
{
  for (auto v : x) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

} // namespace ugan
