#pragma once

#include "ad.hpp"
#include "types.hpp"

#include <iosfwd>
#include <map>

namespace ugan {

// Named real parameter tensors in insertion order. Names are unique and shapes fixed once added.
//
// Serialized form:
//   ugan-params 1
//   count <n>
//   <name> f64 <rank> <d0> <d1> ...      (n lines)
//   end
// followed by the n payloads as little-endian IEEE-754 float64, in header order.
class ParamStore
{
public:
  Tensor &add(std::string const &name, Tensor init);
  Tensor &operator[](std::string const &name);
  Tensor const &operator[](std::string const &name) const;
  bool contains(std::string const &name) const { return index_.contains(name); }
  std::size_t index(std::string const &name) const;

  std::size_t size() const { return names_.size(); }
  Index count() const; // total scalar parameters
  std::vector<std::string> const &names() const { return names_; }
  Tensor &at(std::size_t i) { return values_[i]; }
  Tensor const &at(std::size_t i) const { return values_[i]; }

  // Zero-valued store with the same names and shapes
  ParamStore zeros_like() const;

  // One leaf per parameter, in name order
  std::vector<ad::Var> leaves() const;

  void save(std::ostream &os) const;
  static ParamStore Load(std::istream &is);

  bool operator==(ParamStore const &o) const { return names_ == o.names_ && values_ == o.values_; }

private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig
{
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState
{
  ParamStore m, v;
  Index step = 0;

  static AdamState For(ParamStore const &params);
};

// Bias-corrected Adam update. Throws, naming the parameter, on a non-finite gradient; nothing is
// modified in that case. `frozen` names parameters to leave untouched.
void AdamStep(
  ParamStore &params,
  std::vector<Tensor> const &grads,
  AdamState &state,
  AdamConfig const &cfg,
  std::vector<std::string> const &frozen = {});

} // namespace ugan
