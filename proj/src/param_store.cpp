#include "ugan/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace ugan {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

Tensor &ParamStore::add(std::string const &name, Tensor init)
{
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw Error("invalid parameter name '{}'", name);
  }
  if (index_.contains(name)) {
    throw Error("duplicate parameter name '{}'", name);
  }
  index_[name] = names_.size();
  names_.push_back(name);
  values_.push_back(std::move(init));
  return values_.back();
}

Tensor &ParamStore::operator[](std::string const &name)
{
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error("no parameter named '{}'", name);
  }
  return values_[it->second];
}

Tensor const &ParamStore::operator[](std::string const &name) const
{
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error("no parameter named '{}'", name);
  }
  return values_[it->second];
}

std::size_t ParamStore::index(std::string const &name) const
{
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error("no parameter named '{}'", name);
  }
  return it->second;
}

Index ParamStore::count() const
{
  Index n = 0;
  for (auto const &v : values_) {
    n += v.size();
  }
  return n;
}

ParamStore ParamStore::zeros_like() const
{
  ParamStore z;
  for (std::size_t i = 0; i < names_.size(); i++) {
    z.add(names_[i], Tensor(values_[i].shape(), 0.0));
  }
  return z;
}

std::vector<ad::Var> ParamStore::leaves() const
{
  std::vector<ad::Var> out;
  out.reserve(values_.size());
  for (auto const &v : values_) {
    out.push_back(ad::Var::Leaf(v));
  }
  return out;
}

void ParamStore::save(std::ostream &os) const
{
  os << "ugan-params 1\n" << "count " << names_.size() << "\n";
  for (std::size_t i = 0; i < names_.size(); i++) {
    os << names_[i] << " f64 " << values_[i].rank();
    for (auto d : values_[i].shape()) {
      os << ' ' << d;
    }
    os << '\n';
  }
  os << "end\n";
  for (auto const &v : values_) {
    os.write(reinterpret_cast<char const *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) {
    throw Error("failed writing parameter payloads");
  }
}

ParamStore ParamStore::Load(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line) || line != "ugan-params 1") {
    throw Error("not a parameter container (header '{}')", line);
  }
  std::size_t n = 0;
  {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key >> n) || key != "count") {
      throw Error("bad parameter count line '{}'", line);
    }
  }
  std::vector<std::pair<std::string, Shape>> entries;
  for (std::size_t i = 0; i < n; i++) {
    if (!std::getline(is, line)) {
      throw Error("truncated parameter header at entry {}", i);
    }
    std::istringstream ls(line);
    std::string name, dtype;
    Index rank = 0;
    if (!(ls >> name >> dtype >> rank) || dtype != "f64" || rank < 0) {
      throw Error("bad parameter entry '{}'", line);
    }
    Shape s(static_cast<std::size_t>(rank));
    for (auto &d : s) {
      if (!(ls >> d) || d < 0) {
        throw Error("bad shape in parameter entry '{}'", line);
      }
    }
    entries.emplace_back(name, s);
  }
  if (!std::getline(is, line) || line != "end") {
    throw Error("parameter header not terminated");
  }
  ParamStore p;
  for (auto &[name, s] : entries) {
    Tensor t(s);
    is.read(reinterpret_cast<char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (is.gcount() != static_cast<std::streamsize>(t.size() * sizeof(double))) {
      throw Error("truncated payload for parameter '{}'", name);
    }
    p.add(name, std::move(t));
  }
  return p;
}

AdamState AdamState::For(ParamStore const &params)
{
  return AdamState{.m = params.zeros_like(), .v = params.zeros_like(), .step = 0};
}

void AdamStep(
  ParamStore &params,
  std::vector<Tensor> const &grads,
  AdamState &state,
  AdamConfig const &cfg,
  std::vector<std::string> const &frozen)
{
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam: {} gradients / {} moments for {} parameters", grads.size(), state.m.size(), params.size());
  }
  for (std::size_t i = 0; i < params.size(); i++) {
    if (grads[i].shape() != params.at(i).shape() || state.m.at(i).shape() != params.at(i).shape()) {
      throw Error("adam: shape mismatch for parameter '{}'", params.names()[i]);
    }
    if (!AllFinite(grads[i].span())) {
      throw Error("adam: non-finite gradient for parameter '{}'", params.names()[i]);
    }
  }
  state.step++;
  double const t = static_cast<double>(state.step);
  double const bc1 = 1.0 - std::pow(cfg.beta1, t);
  double const bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); i++) {
    if (std::find(frozen.begin(), frozen.end(), params.names()[i]) != frozen.end()) {
      continue;
    }
    auto &p = params.at(i);
    auto &m = state.m.at(i);
    auto &v = state.v.at(i);
    auto const &g = grads[i];
    for (Index j = 0; j < p.size(); j++) {
      m[j] = cfg.beta1 * m[j] + (1 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1 - cfg.beta2) * g[j] * g[j];
      p[j] -= cfg.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.eps);
    }
  }
}

} // namespace ugan
