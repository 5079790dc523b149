#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "d2e/tensor.hpp"

namespace d2e {

/// Floor applied before every log and division in the loss ops.
inline constexpr double kLogFloor = 1e-12;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of executed ops. Node inputs always precede the node, so
/// a reverse sweep over the storage order is a valid topological order.
class Tape {
 public:
  /// Receives the tape and the id of the node being differentiated; reads
  /// grad(self) and accumulates into grad_mut(input) of each input that
  /// requires_grad.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and sweeps the tape backwards. Returns the
  /// number of backward rules executed.
  std::size_t backward(const Var& root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  const Tensor& grad(const Var& v) const { return grad(v.id()); }
  Tensor& grad_mut(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// When disabled, recorded ops keep their values but drop backward rules.
  void set_grad_enabled(bool enabled) noexcept { grad_enabled_ = enabled; }
  bool grad_enabled() const noexcept { return grad_enabled_; }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
  Tensor empty_grad_;
};

// Elementwise arithmetic. Operands must have identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var square(const Var& a);
Var abs(const Var& a);
Var detach(const Var& a);
Var reshape(const Var& a, Shape shape);

Var sum(const Var& a);
Var mean(const Var& a);
/// Elementwise mean of equally shaped vars.
Var mean_of(std::span<const Var> parts);

/// out[i,j] = sum_k x[i,k] * w[j,k] + b[j]
Var affine(const Var& x, const Var& w, const Var& b);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output side length of a convolution, or throws GeometryError.
std::size_t conv_output_size(std::size_t input, std::size_t kernel, ConvGeometry geom);

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cross-correlation of x[B,Cin,H,W] with kernel[Cout,Cin,K,K].
Var conv2d(const Var& x, const Var& kernel, ConvGeometry geom);
/// Adds bias[c] to every spatial position of channel c in x[B,C,H,W].
Var add_channel_bias(const Var& x, const Var& bias);
/// Non-overlapping average pooling with window k over x[B,C,H,W].
Var avg_pool2d(const Var& x, std::size_t k);

/// Row-wise softmax of z[B,C], max-subtracted.
Var softmax(const Var& z);
/// Mean over the batch of -ln max(probs[i, labels[i]], kLogFloor).
Var cross_entropy(const Var& probs, std::span<const int> labels);
/// Mean over the batch of sum_c p ln(p / max(q, kLogFloor)); p = 0 terms vanish.
Var kl_divergence(const Var& p, const Var& q);

/// Hard Heaviside step (u >= 0) in forward, arctangent surrogate derivative in backward.
Var spike_surrogate(const Var& u, double alpha);
/// Arctangent sigmoid atan(pi*alpha*u/2)/pi + 1/2, used for smooth gradient checks.
Var spike_smooth(const Var& u, double alpha);

// Raw tensor kernels shared by the tape ops and by no-grad analysis code.
Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor* b);
Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, ConvGeometry geom);
Tensor softmax_rows(const Tensor& z);

}  // namespace d2e
