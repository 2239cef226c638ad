#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace ugan {

using Index = std::ptrdiff_t;
using Cx = std::complex<double>;
using Shape = std::vector<Index>;

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;

  template <typename... Args>
  Error(fmt::format_string<Args...> f, Args &&...args)
    : std::runtime_error(fmt::format(f, std::forward<Args>(args)...))
  {
  }
};

inline Index Numel(Shape const &s)
{
  return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<Index>());
}

inline std::string ShapeStr(Shape const &s) { return fmt::format("[{}]", fmt::join(s, ",")); }

// Dense row-major array. Tensor (real) and CTensor (complex) are the two instantiations used
// throughout; a CTensor's storage is interleaved (re, im) doubles.
template <typename T>
class Array
{
public:
  Array() = default;
  explicit Array(Shape s, T fill = T{})
    : shape_(std::move(s))
    , data_(static_cast<std::size_t>(Numel(shape_)), fill)
  {
  }
  Array(Shape s, std::vector<T> d)
    : shape_(std::move(s))
    , data_(std::move(d))
  {
    if (static_cast<Index>(data_.size()) != Numel(shape_)) {
      throw Error("Array: {} values do not fill shape {}", data_.size(), ShapeStr(shape_));
    }
  }

  Shape const &shape() const { return shape_; }
  Index dim(std::size_t i) const { return shape_.at(i); }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return static_cast<Index>(data_.size()); }

  T *data() { return data_.data(); }
  T const *data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<T const> span() const { return data_; }
  std::vector<T> &vec() & { return data_; }
  std::vector<T> const &vec() const & { return data_; }
  // a range-for over a temporary's vec() would dangle
  std::vector<T> &vec() && = delete;

  T &operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  T const &operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  // 2-D / 3-D accessors on the trailing dimensions
  T &operator()(Index y, Index x) { return data_[y * shape_.back() + x]; }
  T const &operator()(Index y, Index x) const { return data_[y * shape_.back() + x]; }
  T &operator()(Index c, Index y, Index x)
  {
    auto const h = shape_[shape_.size() - 2], w = shape_.back();
    return data_[(c * h + y) * w + x];
  }
  T const &operator()(Index c, Index y, Index x) const
  {
    auto const h = shape_[shape_.size() - 2], w = shape_.back();
    return data_[(c * h + y) * w + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  Array reshaped(Shape s) const
  {
    if (Numel(s) != size()) {
      throw Error("reshape {} -> {}", ShapeStr(shape_), ShapeStr(s));
    }
    return Array(std::move(s), data_);
  }

  bool operator==(Array const &) const = default;

private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = Array<double>;
using CTensor = Array<Cx>;

// Complex values as a real tensor with a trailing dimension of 2, and back.
Tensor ToReal(CTensor const &c);
CTensor ToComplex(Tensor const &t);

double Norm(std::span<Cx const> x);
double Norm(std::span<double const> x);
Cx Dot(std::span<Cx const> a, std::span<Cx const> b); // sum conj(a) b
bool AllFinite(std::span<double const> x);

} // namespace ugan
