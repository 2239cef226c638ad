#include "ugan/ad.hpp"

#include "ugan/fft.hpp"
#include "ugan/kernels/conv.hpp"
#include "ugan/mri/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace ugan::ad {

namespace {

thread_local bool grad_enabled = true;

using Need = std::vector<bool>;
using Vjp = std::function<std::vector<Var>(Var const &, Need const &)>;

Var Make(Tensor value, char const *op, std::vector<Var> inputs, Vjp vjp)
{
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  bool const rg = grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](Var const &v) { return v.requires_grad(); });
  if (rg) {
    n->requires_grad = true;
    n->vjp = [inputs, vjp = std::move(vjp)](Var const &g) {
      Need need(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); i++) {
        need[i] = inputs[i].requires_grad();
      }
      return vjp(g, need);
    };
    n->inputs = std::move(inputs);
  }
  return Var(std::move(n));
}

void SameShape(char const *op, Var const &a, Var const &b)
{
  if (a.shape() != b.shape()) {
    throw Error("{}: shape mismatch {} vs {}", op, ShapeStr(a.shape()), ShapeStr(b.shape()));
  }
}

template <typename F>
Tensor Map(Tensor const &a, F f)
{
  Tensor out(a.shape());
  for (Index i = 0; i < a.size(); i++) {
    out[i] = f(a[i]);
  }
  return out;
}

template <typename F>
Tensor Zip(Tensor const &a, Tensor const &b, F f)
{
  Tensor out(a.shape());
  for (Index i = 0; i < a.size(); i++) {
    out[i] = f(a[i], b[i]);
  }
  return out;
}

void RequireComplex(char const *op, Var const &a)
{
  if (a.shape().empty() || a.shape().back() != 2) {
    throw Error("{}: expected a complex [...,2] tensor, got {}", op, ShapeStr(a.shape()));
  }
}

} // namespace

Var Var::Constant(Tensor t)
{
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->op = "const";
  return Var(std::move(n));
}

Var Var::Leaf(Tensor t)
{
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  return Var(std::move(n));
}

Var Var::Scalar(double v) { return Constant(Tensor(Shape{}, v)); }

double Var::item() const
{
  if (value().size() != 1) {
    throw Error("item() on non-scalar {}", ShapeStr(shape()));
  }
  return value()[0];
}

bool GradEnabled() { return grad_enabled; }
NoGradGuard::NoGradGuard()
  : prev_(grad_enabled)
{
  grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { grad_enabled = prev_; }

std::vector<Var> Grad(Var const &loss, std::vector<Var> const &wrt, bool create_graph)
{
  if (!loss.defined() || loss.value().size() != 1) {
    throw Error("Grad: loss must be a scalar, got {}", loss.defined() ? ShapeStr(loss.shape()) : "undefined");
  }
  std::unordered_set<Node *> targets;
  for (auto const &w : wrt) {
    targets.insert(w.node());
  }

  // post-order DFS over the recorded graph
  std::vector<Node *> order;
  if (loss.requires_grad()) {
    std::unordered_set<Node *> seen;
    std::vector<std::pair<Node *, std::size_t>> stack{{loss.node(), 0}};
    seen.insert(loss.node());
    while (!stack.empty()) {
      auto &[n, next] = stack.back();
      if (next < n->inputs.size()) {
        Node *in = n->inputs[next++].node();
        if (in->requires_grad && seen.insert(in).second) {
          stack.emplace_back(in, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  std::optional<NoGradGuard> guard;
  if (!create_graph) {
    guard.emplace();
  }

  std::unordered_map<Node *, Var> grads;
  grads[loss.node()] = Var::Constant(Tensor(loss.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    auto g = grads.find(n);
    if (g == grads.end()) {
      continue;
    }
    if (n->vjp) {
      auto const gin = n->vjp(g->second);
      for (std::size_t i = 0; i < n->inputs.size(); i++) {
        Node *in = n->inputs[i].node();
        if (!in->requires_grad || !gin[i].defined()) {
          continue;
        }
        if (gin[i].shape() != in->value.shape()) {
          throw Error("Grad: op {} produced gradient {} for input {}", n->op, ShapeStr(gin[i].shape()), ShapeStr(in->value.shape()));
        }
        auto acc = grads.find(in);
        if (acc == grads.end()) {
          grads.emplace(in, gin[i]);
        } else {
          acc->second = Add(acc->second, gin[i]);
        }
      }
    }
    if (!targets.contains(n)) {
      grads.erase(n);
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (auto const &w : wrt) {
    auto g = grads.find(w.node());
    out.push_back(g != grads.end() ? g->second : Var::Constant(Tensor(w.shape(), 0.0)));
  }
  return out;
}

// --- real elementwise ---------------------------------------------------------------------

Var Add(Var const &a, Var const &b)
{
  SameShape("add", a, b);
  return Make(Zip(a.value(), b.value(), std::plus<>()), "add", {a, b}, [](Var const &g, Need const &) {
    return std::vector<Var>{g, g};
  });
}

Var Sub(Var const &a, Var const &b)
{
  SameShape("sub", a, b);
  return Make(Zip(a.value(), b.value(), std::minus<>()), "sub", {a, b}, [](Var const &g, Need const &need) {
    return std::vector<Var>{g, need[1] ? Neg(g) : Var{}};
  });
}

Var Mul(Var const &a, Var const &b)
{
  SameShape("mul", a, b);
  return Make(Zip(a.value(), b.value(), std::multiplies<>()), "mul", {a, b}, [a, b](Var const &g, Need const &need) {
    return std::vector<Var>{need[0] ? Mul(g, b) : Var{}, need[1] ? Mul(g, a) : Var{}};
  });
}

Var Neg(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return -v; }), "neg", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{Neg(g)};
  });
}

Var Scale(Var const &a, double s)
{
  return Make(Map(a.value(), [s](double v) { return s * v; }), "scale", {a}, [s](Var const &g, Need const &) {
    return std::vector<Var>{Scale(g, s)};
  });
}

Var AddConst(Var const &a, double s)
{
  return Make(Map(a.value(), [s](double v) { return v + s; }), "add_const", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{g};
  });
}

Var Sin(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return std::sin(v); }), "sin", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Mul(g, Cos(a))};
  });
}

Var Cos(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return std::cos(v); }), "cos", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Neg(Mul(g, Sin(a)))};
  });
}

Var Sqrt(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return std::sqrt(v); }), "sqrt", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Mul(g, Scale(Reciprocal(Sqrt(a)), 0.5))};
  });
}

Var Reciprocal(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return v == 0 ? 0.0 : 1.0 / v; }), "reciprocal", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Neg(Mul(g, Square(Reciprocal(a))))};
  });
}

Var Abs(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return std::abs(v); }), "abs", {a}, [a](Var const &g, Need const &) {
    auto sign = Map(a.value(), [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    return std::vector<Var>{Mul(g, Var::Constant(std::move(sign)))};
  });
}

Var Square(Var const &a)
{
  return Make(Map(a.value(), [](double v) { return v * v; }), "square", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Mul(g, Scale(a, 2.0))};
  });
}

Var LeakyRelu(Var const &a, double slope)
{
  if (!(slope > 0 && slope < 1)) {
    throw Error("leaky_relu slope must be in (0,1), got {}", slope);
  }
  return Make(Map(a.value(), [slope](double v) { return v >= 0 ? v : slope * v; }), "leaky_relu", {a}, [a, slope](Var const &g, Need const &) {
    auto d = Map(a.value(), [slope](double v) { return v >= 0 ? 1.0 : slope; });
    return std::vector<Var>{Mul(g, Var::Constant(std::move(d)))};
  });
}

// --- reductions and broadcasts ---------------------------------------------------------------

Var Sum(Var const &a)
{
  double s = 0;
  for (auto v : a.value().vec()) {
    s += v;
  }
  return Make(Tensor(Shape{}, s), "sum", {a}, [shape = a.shape()](Var const &g, Need const &) {
    return std::vector<Var>{Expand(g, shape)};
  });
}

Var Mean(Var const &a) { return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var Expand(Var const &scalar, Shape shape)
{
  if (scalar.value().size() != 1) {
    throw Error("expand: source must be a scalar, got {}", ShapeStr(scalar.shape()));
  }
  Tensor out(shape, scalar.value()[0]);
  return Make(std::move(out), "expand", {scalar}, [ss = scalar.shape()](Var const &g, Need const &) {
    return std::vector<Var>{Reshape(Sum(g), ss)};
  });
}

Var ScaleBy(Var const &scalar, Var const &a)
{
  if (scalar.value().size() != 1) {
    throw Error("scale_by: factor must be a scalar, got {}", ShapeStr(scalar.shape()));
  }
  double const s = scalar.value()[0];
  return Make(Map(a.value(), [s](double v) { return s * v; }), "scale_by", {scalar, a}, [scalar, a](Var const &g, Need const &need) {
    return std::vector<Var>{need[0] ? Reshape(Dot(g, a), scalar.shape()) : Var{}, need[1] ? ScaleBy(scalar, g) : Var{}};
  });
}

Var Dot(Var const &a, Var const &b) { return Sum(Mul(a, b)); }

Var Reshape(Var const &a, Shape shape)
{
  if (shape == a.shape()) {
    return a;
  }
  return Make(a.value().reshaped(shape), "reshape", {a}, [orig = a.shape()](Var const &g, Need const &) {
    return std::vector<Var>{Reshape(g, orig)};
  });
}

Var Tile(Var const &a, Index n)
{
  Shape s = a.shape();
  s.insert(s.begin(), n);
  Tensor out(s);
  Index const m = a.value().size();
  for (Index i = 0; i < n; i++) {
    std::copy(a.value().data(), a.value().data() + m, out.data() + i * m);
  }
  return Make(std::move(out), "tile", {a}, [](Var const &g, Need const &) { return std::vector<Var>{SumLead(g)}; });
}

Var SumLead(Var const &a)
{
  if (a.shape().empty()) {
    throw Error("sum_lead on a scalar");
  }
  Index const n = a.shape()[0];
  Shape s(a.shape().begin() + 1, a.shape().end());
  Tensor out(s);
  Index const m = out.size();
  for (Index i = 0; i < n; i++) {
    for (Index j = 0; j < m; j++) {
      out[j] += a.value()[i * m + j];
    }
  }
  return Make(std::move(out), "sum_lead", {a}, [n](Var const &g, Need const &) { return std::vector<Var>{Tile(g, n)}; });
}

Var Widen(Var const &a)
{
  Shape s = a.shape();
  s.push_back(2);
  Tensor out(s);
  for (Index i = 0; i < a.value().size(); i++) {
    out[2 * i] = out[2 * i + 1] = a.value()[i];
  }
  return Make(std::move(out), "widen", {a}, [](Var const &g, Need const &) { return std::vector<Var>{PairSum(g)}; });
}

Var PairSum(Var const &a)
{
  RequireComplex("pair_sum", a);
  Shape s(a.shape().begin(), a.shape().end() - 1);
  Tensor out(s);
  for (Index i = 0; i < out.size(); i++) {
    out[i] = a.value()[2 * i] + a.value()[2 * i + 1];
  }
  return Make(std::move(out), "pair_sum", {a}, [](Var const &g, Need const &) { return std::vector<Var>{Widen(g)}; });
}

Var ChannelSum(Var const &a)
{
  if (a.shape().size() != 3) {
    throw Error("channel_sum expects [C,H,W], got {}", ShapeStr(a.shape()));
  }
  Index const C = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
  Tensor out(Shape{C});
  for (Index c = 0; c < C; c++) {
    double s = 0;
    for (Index i = 0; i < h * w; i++) {
      s += a.value()[c * h * w + i];
    }
    out[c] = s;
  }
  return Make(std::move(out), "channel_sum", {a}, [h, w](Var const &g, Need const &) {
    return std::vector<Var>{ChannelBroadcast(g, h, w)};
  });
}

Var ChannelBroadcast(Var const &b, Index h, Index w)
{
  if (b.shape().size() != 1) {
    throw Error("channel_broadcast expects [C], got {}", ShapeStr(b.shape()));
  }
  Index const C = b.shape()[0];
  Tensor out(Shape{C, h, w});
  for (Index c = 0; c < C; c++) {
    std::fill(out.data() + c * h * w, out.data() + (c + 1) * h * w, b.value()[c]);
  }
  return Make(std::move(out), "channel_broadcast", {b}, [](Var const &g, Need const &) {
    return std::vector<Var>{ChannelSum(g)};
  });
}

Var AddBias(Var const &x, Var const &b)
{
  if (x.shape().size() != 3 || b.shape().size() != 1 || b.shape()[0] != x.shape()[0]) {
    throw Error("add_bias: x {} and b {} disagree", ShapeStr(x.shape()), ShapeStr(b.shape()));
  }
  return Add(x, ChannelBroadcast(b, x.shape()[1], x.shape()[2]));
}

Var SpatialMean(Var const &a)
{
  if (a.shape().size() != 3) {
    throw Error("spatial_mean expects [C,H,W], got {}", ShapeStr(a.shape()));
  }
  return Scale(ChannelSum(a), 1.0 / static_cast<double>(a.shape()[1] * a.shape()[2]));
}

// --- convolution ---------------------------------------------------------------------------

Var Conv2d(Var const &x, Var const &w, Index stride)
{
  auto const geom = kernels::ConvGeom::From(x.shape(), w.shape(), stride);
  Tensor y(Shape{geom.c_out, geom.out_h(), geom.out_w()});
  kernels::parallel::Forward(geom, x.value().data(), w.value().data(), y.data());
  return Make(std::move(y), "conv2d", {x, w}, [x, w, geom](Var const &g, Need const &need) {
    return std::vector<Var>{
      need[0] ? ConvInputGrad(g, w, geom.stride, geom.h, geom.w) : Var{},
      need[1] ? ConvWeightGrad(x, g, geom.stride, geom.k) : Var{}};
  });
}

Var Conv2d(Var const &x, Var const &w, Var const &b, Index stride) { return AddBias(Conv2d(x, w, stride), b); }

Var ConvInputGrad(Var const &gy, Var const &w, Index stride, Index h, Index width)
{
  auto const geom = kernels::ConvGeom::From(Shape{w.shape().at(1), h, width}, w.shape(), stride);
  if (gy.shape() != Shape{geom.c_out, geom.out_h(), geom.out_w()}) {
    throw Error("conv_input_grad: gradient {} does not match output geometry", ShapeStr(gy.shape()));
  }
  Tensor gx(Shape{geom.c_in, h, width});
  kernels::parallel::InputGrad(geom, gy.value().data(), w.value().data(), gx.data());
  return Make(std::move(gx), "conv_input_grad", {gy, w}, [gy, w, stride](Var const &g, Need const &need) {
    return std::vector<Var>{
      need[0] ? Conv2d(g, w, stride) : Var{},
      need[1] ? ConvWeightGrad(g, gy, stride, w.shape()[2]) : Var{}};
  });
}

Var ConvWeightGrad(Var const &x, Var const &gy, Index stride, Index k)
{
  if (x.shape().size() != 3 || gy.shape().size() != 3) {
    throw Error("conv_weight_grad expects [C,H,W] tensors, got {} and {}", ShapeStr(x.shape()), ShapeStr(gy.shape()));
  }
  Shape const wshape{gy.shape()[0], x.shape()[0], k, k};
  auto const geom = kernels::ConvGeom::From(x.shape(), wshape, stride);
  if (gy.shape() != Shape{geom.c_out, geom.out_h(), geom.out_w()}) {
    throw Error("conv_weight_grad: gradient {} does not match output geometry", ShapeStr(gy.shape()));
  }
  Tensor gw(wshape);
  kernels::parallel::WeightGrad(geom, x.value().data(), gy.value().data(), gw.data());
  return Make(std::move(gw), "conv_weight_grad", {x, gy}, [x, gy, geom](Var const &g, Need const &need) {
    return std::vector<Var>{
      need[0] ? ConvInputGrad(gy, g, geom.stride, geom.h, geom.w) : Var{},
      need[1] ? Conv2d(x, g, geom.stride) : Var{}};
  });
}

// --- complex -------------------------------------------------------------------------------

Var CMul(Var const &a, Var const &b)
{
  RequireComplex("cmul", a);
  SameShape("cmul", a, b);
  Tensor out(a.shape());
  auto const &av = a.value();
  auto const &bv = b.value();
  for (Index i = 0; i < out.size(); i += 2) {
    out[i] = av[i] * bv[i] - av[i + 1] * bv[i + 1];
    out[i + 1] = av[i] * bv[i + 1] + av[i + 1] * bv[i];
  }
  return Make(std::move(out), "cmul", {a, b}, [a, b](Var const &g, Need const &need) {
    return std::vector<Var>{need[0] ? CMul(g, Conj(b)) : Var{}, need[1] ? CMul(g, Conj(a)) : Var{}};
  });
}

Var Conj(Var const &a)
{
  RequireComplex("conj", a);
  Tensor out = a.value();
  for (Index i = 1; i < out.size(); i += 2) {
    out[i] = -out[i];
  }
  return Make(std::move(out), "conj", {a}, [](Var const &g, Need const &) { return std::vector<Var>{Conj(g)}; });
}

Var Magnitude(Var const &a)
{
  RequireComplex("magnitude", a);
  Shape s(a.shape().begin(), a.shape().end() - 1);
  Tensor out(s);
  for (Index i = 0; i < out.size(); i++) {
    out[i] = std::hypot(a.value()[2 * i], a.value()[2 * i + 1]);
  }
  return Make(std::move(out), "magnitude", {a}, [a](Var const &g, Need const &) {
    return std::vector<Var>{Mul(a, Widen(Mul(g, Reciprocal(Magnitude(a)))))};
  });
}

Var CSquare(Var const &a) { return CMul(a, a); }

Var Fft2c(Var const &a)
{
  RequireComplex("fft2c", a);
  return Make(ToReal(fft2c(ToComplex(a.value()))), "fft2c", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{Ifft2c(g)};
  });
}

Var Ifft2c(Var const &a)
{
  RequireComplex("ifft2c", a);
  return Make(ToReal(ifft2c(ToComplex(a.value()))), "ifft2c", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{Fft2c(g)};
  });
}

Var ToChannels(Var const &a)
{
  if (a.shape().size() != 3 || a.shape()[2] != 2) {
    throw Error("to_channels expects [H,W,2], got {}", ShapeStr(a.shape()));
  }
  Index const h = a.shape()[0], w = a.shape()[1];
  Tensor out(Shape{2, h, w});
  for (Index i = 0; i < h * w; i++) {
    out[i] = a.value()[2 * i];
    out[h * w + i] = a.value()[2 * i + 1];
  }
  return Make(std::move(out), "to_channels", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{FromChannels(g)};
  });
}

Var FromChannels(Var const &a)
{
  if (a.shape().size() != 3 || a.shape()[0] != 2) {
    throw Error("from_channels expects [2,H,W], got {}", ShapeStr(a.shape()));
  }
  Index const h = a.shape()[1], w = a.shape()[2];
  Tensor out(Shape{h, w, 2});
  for (Index i = 0; i < h * w; i++) {
    out[2 * i] = a.value()[i];
    out[2 * i + 1] = a.value()[h * w + i];
  }
  return Make(std::move(out), "from_channels", {a}, [](Var const &g, Need const &) {
    return std::vector<Var>{ToChannels(g)};
  });
}

Var Apply(Elementwise op, Var const &a, Var const &b)
{
  switch (op) {
  case Elementwise::Add: return Add(a, b);
  case Elementwise::Sub: return Sub(a, b);
  case Elementwise::Mul: return CMul(a, b);
  case Elementwise::Conj: return Conj(a);
  case Elementwise::Scale:
    if (!b.defined() || b.value().size() != 1) {
      throw Error("elementwise scale needs a real scalar factor");
    }
    return ScaleBy(b, a);
  case Elementwise::Magnitude: return Magnitude(a);
  case Elementwise::Square: return CSquare(a);
  }
  throw Error("unknown elementwise op");
}

// --- imaging operator ---------------------------------------------------------------------

Var Forward(Var const &x, ImagingModel const &model)
{
  auto m = std::make_shared<ImagingModel const>(model);
  return Make(ToReal(ForwardOp(ToComplex(x.value()), *m)), "forward_op", {x}, [m](Var const &g, Need const &) {
    return std::vector<Var>{Adjoint(g, *m)};
  });
}

Var Adjoint(Var const &y, ImagingModel const &model)
{
  auto m = std::make_shared<ImagingModel const>(model);
  return Make(ToReal(AdjointOp(ToComplex(y.value()), *m)), "adjoint_op", {y}, [m](Var const &g, Need const &) {
    return std::vector<Var>{Forward(g, *m)};
  });
}

} // namespace ugan::ad
