#pragma once

// Minimal reverse-mode automatic differentiation over dense tensors.
//
// A Tensor is a value: shape plus a flat row-major buffer of doubles. A tensor
// may additionally carry a handle to a node on a Tape; every op whose inputs
// include at least one such tracked tensor records a node with its backward
// rule on that tape. Untracked tensors never touch a tape, so forward values
// are identical with and without gradient recording.
//
// Shapes: signals are [channels, length], conv1d weights [out_ch, in_ch, k],
// conv_transpose1d weights [in_ch, out_ch, k], scalars [].

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sig2sig::ad {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

class Tensor {
 public:
  Tensor();  // scalar 0
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_scalar() const noexcept { return shape_.empty(); }

  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  // Only meaningful for scalars (or size-1 tensors).
  double item() const;

  // Mutable access is restricted to untracked tensors; mutating recorded
  // values would invalidate their backward rules.
  std::span<double> mutable_data();

  bool tracked() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  NodeId node() const noexcept { return node_; }

 private:
  friend class Tape;

  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

// Append-only record of operations. Node ids are assigned in creation order,
// so every node's inputs precede it and the sequence is topologically sorted.
class Tape {
 public:
  // Receives dL/d(output) and accumulates into the inputs' gradients.
  using BackwardFn = std::function<void(std::span<const double> grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf (typically a parameter) and returns its tracked copy.
  Tensor watch(Tensor leaf);

  // Registers `out` as the result of an op with the given backward rule.
  Tensor record(Tensor out, BackwardFn backward);

  // Reverse sweep from a scalar root produced on this tape. Gradients of all
  // previous nodes are reset; non-ancestors of root end up zero.
  void backward(const Tensor& root);

  // Gradient of a tracked tensor after backward().
  std::span<const double> grad(const Tensor& t) const;
  std::span<const double> grad(NodeId id) const;

  // Adds `g` into the gradient buffer of node `id` (used by backward rules).
  void accumulate(NodeId id, std::span<const double> g);
  // Direct access to a gradient buffer for in-place accumulation.
  std::span<double> grad_buffer(NodeId id);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::size_t size;
    BackwardFn backward;
  };

  Tensor attach(Tensor t, BackwardFn backward);
  void ensure_grads();

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<char> reached_;
};

// Returns an untracked copy of `t` (gradients do not flow through it).
Tensor detach(const Tensor& t);

enum class BinaryOp { add, sub, mul, div };

// Elementwise binary op; shapes must match exactly.
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
// Tensor-with-scalar variant.
Tensor elementwise(BinaryOp op, const Tensor& a, double b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }
inline Tensor add(const Tensor& a, double b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor sub(const Tensor& a, double b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor mul(const Tensor& a, double b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor div(const Tensor& a, double b) { return elementwise(BinaryOp::div, a, b); }

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, b); }
inline Tensor operator*(double a, const Tensor& b) { return mul(b, a); }

enum class ReduceOp { sum, mean };

Tensor reduce(ReduceOp op, const Tensor& a);
inline Tensor sum(const Tensor& a) { return reduce(ReduceOp::sum, a); }
inline Tensor mean(const Tensor& a) { return reduce(ReduceOp::mean, a); }

enum class ActivationKind { identity, relu, leaky_relu, tanh, abs, square };

// Subgradients at 0: relu -> 0, leaky_relu -> slope, abs -> -1.
struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.2;  // leaky_relu only
};

Tensor activation(const Activation& act, const Tensor& a);
inline Tensor relu(const Tensor& a) { return activation({ActivationKind::relu}, a); }
inline Tensor leaky_relu(const Tensor& a, double slope) {
  return activation({ActivationKind::leaky_relu, slope}, a);
}
inline Tensor tanh(const Tensor& a) { return activation({ActivationKind::tanh}, a); }
inline Tensor abs(const Tensor& a) { return activation({ActivationKind::abs}, a); }
inline Tensor square(const Tensor& a) { return activation({ActivationKind::square}, a); }

// input [in_ch, L], weight [out_ch, in_ch, k], bias [out_ch].
// Cross-correlation with zero padding; output [out_ch, floor((L + 2 pad - k)/stride) + 1].
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad);

// input [in_ch, L], weight [in_ch, out_ch, k], bias [out_ch].
// Output [out_ch, (L - 1) stride - 2 pad + k]; the adjoint of conv1d plus bias.
Tensor conv_transpose1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride, std::size_t pad);

// [c1, L] ++ [c2, L] -> [c1 + c2, L]
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Channels [begin, begin + count) of a [C, L] tensor.
Tensor slice_channels(const Tensor& a, std::size_t begin, std::size_t count);

}  // namespace sig2sig::ad
