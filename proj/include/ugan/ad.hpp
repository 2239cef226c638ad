#pragma once

#include "types.hpp"

#include <memory>

namespace ugan {
class ImagingModel;
}

// Reverse-mode automatic differentiation over real tensors.
//
// Complex quantities live in the graph as real tensors with a trailing dimension of 2
// (re, im), so every gradient is taken with respect to real and imaginary parts independently.
//
// Each operation's vector-Jacobian product is itself written with graph operations. When
// Grad() is asked to create_graph, the returned gradients are ordinary graph nodes and a scalar
// built from them can be differentiated again. This is what the WGAN-GP penalty needs.
namespace ugan::ad {

class Var;
using VjpFn = std::function<std::vector<Var>(Var const &grad)>;

struct Node
{
  Tensor value;
  std::vector<Var> inputs;
  VjpFn vjp;
  char const *op = "leaf";
  bool requires_grad = false;
};

class Var
{
public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n)
    : node_(std::move(n))
  {
  }

  static Var Constant(Tensor t);
  static Var Leaf(Tensor t); // requires grad
  static Var Scalar(double v);

  bool defined() const { return node_ != nullptr; }
  Tensor const &value() const { return node_->value; }
  Shape const &shape() const { return node_->value.shape(); }
  double item() const; // value of a scalar (single element) node
  bool requires_grad() const { return node_ && node_->requires_grad; }
  char const *op() const { return node_->op; }
  Node *node() const { return node_.get(); }
  Var detach() const { return Constant(value()); }

private:
  std::shared_ptr<Node> node_;
};

// Graph recording is on by default. While a guard is alive on this thread, operations produce
// constants.
bool GradEnabled();
class NoGradGuard
{
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(NoGradGuard const &) = delete;
  NoGradGuard &operator=(NoGradGuard const &) = delete;

private:
  bool prev_;
};

// Gradients of a scalar `loss` with respect to each of `wrt`. A leaf the loss does not depend
// on gets a zero gradient. With create_graph the gradients are differentiable nodes.
std::vector<Var> Grad(Var const &loss, std::vector<Var> const &wrt, bool create_graph = false);

// --- real elementwise ---------------------------------------------------------------------
Var Add(Var const &a, Var const &b);
Var Sub(Var const &a, Var const &b);
Var Mul(Var const &a, Var const &b);
Var Neg(Var const &a);
Var Scale(Var const &a, double s);
Var AddConst(Var const &a, double s);
Var Sin(Var const &a);
Var Cos(Var const &a);
Var Sqrt(Var const &a);       // derivative at 0 is taken as 0
Var Reciprocal(Var const &a); // 1/a, 0 where a == 0
Var Abs(Var const &a);        // derivative at 0 is taken as 0
Var Square(Var const &a);
Var LeakyRelu(Var const &a, double slope = 0.2); // derivative at 0 is 1

// --- reductions and broadcasts ---------------------------------------------------------------
Var Sum(Var const &a);                        // -> scalar
Var Mean(Var const &a);                       // -> scalar
Var Expand(Var const &scalar, Shape shape);   // scalar -> shape
Var ScaleBy(Var const &scalar, Var const &a); // scalar Var times tensor
Var Dot(Var const &a, Var const &b);          // sum(a * b)
Var Reshape(Var const &a, Shape shape);
Var Tile(Var const &a, Index n);    // [...] -> [n, ...]
Var SumLead(Var const &a);          // [n, ...] -> [...]
Var Widen(Var const &a);            // [...] -> [..., 2] duplicating each value
Var PairSum(Var const &a);          // [..., 2] -> [...]
Var ChannelSum(Var const &a);       // [C, H, W] -> [C]
Var ChannelBroadcast(Var const &b, Index h, Index w); // [C] -> [C, H, W]
Var AddBias(Var const &x, Var const &b);               // [C,H,W] + [C]
Var SpatialMean(Var const &a);      // [C, H, W] -> [C]

// --- convolution ---------------------------------------------------------------------------
Var Conv2d(Var const &x, Var const &w, Index stride = 1);
Var Conv2d(Var const &x, Var const &w, Var const &b, Index stride = 1);
Var ConvInputGrad(Var const &gy, Var const &w, Index stride, Index h, Index width);
Var ConvWeightGrad(Var const &x, Var const &gy, Index stride, Index k);

// --- complex, on [..., 2] tensors -----------------------------------------------------------
Var CMul(Var const &a, Var const &b);
Var Conj(Var const &a);
Var Magnitude(Var const &a);   // [..., 2] -> [...]
Var CSquare(Var const &a);     // z * z
Var Fft2c(Var const &a);       // [..., H, W, 2]
Var Ifft2c(Var const &a);
Var ToChannels(Var const &a);   // [H, W, 2] -> [2, H, W]
Var FromChannels(Var const &a); // [2, H, W] -> [H, W, 2]

// Elementwise dispatch by tag on complex tensors. "scale" and "magnitude"/"conj"/"square"
// ignore b except scale, which reads b as a real scalar.
enum class Elementwise
{
  Add,
  Sub,
  Mul,
  Conj,
  Scale,
  Magnitude,
  Square
};
Var Apply(Elementwise op, Var const &a, Var const &b = {});

// --- imaging operator ---------------------------------------------------------------------
Var Forward(Var const &x, ImagingModel const &model); // [H,W,2] -> [C,H,W,2]
Var Adjoint(Var const &y, ImagingModel const &model); // [C,H,W,2] -> [H,W,2]

} // namespace ugan::ad
