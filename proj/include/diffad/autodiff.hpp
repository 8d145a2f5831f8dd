#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "diffad/ndarray.hpp"

namespace diffad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  const NdArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape for one logical computation (one training
/// step, one forward pass). Nodes are appended in evaluation order, so the
/// recorded graph is acyclic by construction. Not thread-safe.
///
/// A tape built with record = false keeps values only; no backward closures
/// or parent links are stored and gradient queries are rejected.
class Tape {
 public:
  /// Accumulates into the parents' gradients given this node's gradient.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(NdArray value);
  /// Leaf that gradients flow into (a parameter or differentiable input).
  Var leaf(NdArray value);

  Var push(NdArray value, std::vector<std::size_t> parents, Backward backward);

  const NdArray& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool any_requires_grad(std::span<const std::size_t> ids) const;
  /// Gradient buffer of a node, allocated as zeros on first access.
  NdArray& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  /// Runs backpropagation from a scalar root.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    NdArray value;
    NdArray grad;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
  };
  bool record_;
  std::vector<Node> nodes_;
};

/// d(loss)/d(param) for each requested parameter. Parameters the loss does
/// not depend on receive a zero array of their own shape.
std::vector<NdArray> gradient_of_scalar(Tape& tape, Var loss, std::span<const Var> params);

/// Primitive differentiable operations. Binary elementwise ops require
/// identical shapes; use broadcast_to for expansion.
namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// [M,K] x [K,N] -> [M,N].
Var matmul(Var a, Var b);
/// x [B,Cin,L], w [Cout,Cin,K] (K odd) -> [B,Cout,L]; zero "same" padding,
/// taps spaced by `dilation`.
Var conv1d(Var x, Var w, std::size_t dilation = 1);
/// Depthwise long causal convolution via FFT: u [B,H,L], k [H,L] -> [B,H,L],
/// y[b,h,i] = sum_{j<=i} k[h,j] u[b,h,i-j].
Var causal_conv(Var u, Var k);

Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
/// x * sigmoid(x), composed from primitives.
Var silu(Var a);

Var sum(Var a);
Var mean(Var a);

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var concat(std::span<const Var> parts, std::size_t axis);
/// Right-aligned numpy-style expansion of size-1 (or missing leading) axes.
Var broadcast_to(Var a, Shape shape);
Var reshape(Var a, Shape shape);

}  // namespace ad

}  // namespace diffad
