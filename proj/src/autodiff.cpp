#include "sig2sig/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "sig2sig/error.hpp"
#include "sig2sig/kernels.hpp"

namespace sig2sig::ad {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError(fmt::format("shape {} needs {} values, got {}", shape_string(shape_),
                                 shape_size(shape_), data_.size()));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " + shape_string(shape_));
  }
  return data_[0];
}

std::span<double> Tensor::mutable_data() {
  if (tape_) throw Error("cannot mutate a tensor recorded on a tape");
  return data_;
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::attach(Tensor t, BackwardFn backward) {
  if (t.tape_) throw Error("tensor is already recorded on a tape");
  t.tape_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back({t.size(), std::move(backward)});
  return t;
}

Tensor Tape::watch(Tensor leaf) { return attach(detach(leaf), nullptr); }

Tensor Tape::record(Tensor out, BackwardFn backward) {
  return attach(std::move(out), std::move(backward));
}

void Tape::ensure_grads() {
  grads_.resize(nodes_.size());
  reached_.assign(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i].assign(nodes_[i].size, 0.0);
}

void Tape::backward(const Tensor& root) {
  if (root.tape_ != this) throw Error("backward root was not produced on this tape");
  if (root.size() != 1) {
    throw ShapeError("backward root must be a scalar, got shape " + shape_string(root.shape()));
  }
  ensure_grads();
  grads_[root.node_][0] = 1.0;
  reached_[root.node_] = 1;
  for (std::size_t id = root.node_ + 1; id-- > 0;) {
    if (!reached_[id] || !nodes_[id].backward) continue;
    nodes_[id].backward(grads_[id], *this);
  }
}

std::span<const double> Tape::grad(const Tensor& t) const {
  if (t.tape_ != this) throw Error("tensor is not recorded on this tape");
  return grad(t.node_);
}

std::span<const double> Tape::grad(NodeId id) const {
  if (id >= grads_.size()) throw Error("no gradient available; call backward() first");
  return grads_[id];
}

std::span<double> Tape::grad_buffer(NodeId id) {
  reached_.at(id) = 1;
  return grads_.at(id);
}

void Tape::accumulate(NodeId id, std::span<const double> g) {
  auto buf = grad_buffer(id);
  if (buf.size() != g.size()) throw ShapeError("gradient size mismatch in accumulate");
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

// ---------------------------------------------------------------------------
// Ops

Tensor detach(const Tensor& t) { return Tensor(t.shape(), t.values()); }

namespace {

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) throw Error("op inputs are recorded on different tapes");
    tape = t->tape();
  }
  return tape;
}

const char* op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
  }
  return "?";
}

double apply(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div: return a / b;
  }
  return 0.0;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(fmt::format("{} must have rank {}, got shape {}", what, rank,
                                 shape_string(t.shape())));
  }
}

}  // namespace

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  const bool broadcast = b.is_scalar() && !a.is_scalar();
  if (!broadcast && a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op_name(op),
                                 shape_string(a.shape()), shape_string(b.shape())));
  }
  const std::size_t bstep = broadcast ? 0 : 1;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(op, a[i], b[i * bstep]);
  Tensor result(a.shape(), std::move(out));

  Tape* tape = common_tape({&a, &b});
  if (!tape) return result;

  const bool ta = a.tracked(), tb = b.tracked();
  const NodeId ia = a.node(), ib = b.node();
  std::vector<double> av, bv;
  if (op == BinaryOp::mul || op == BinaryOp::div) {
    av = a.values();
    bv = b.values();
  }
  return tape->record(std::move(result), [=, av = std::move(av), bv = std::move(bv)](
                                              std::span<const double> g, Tape& t) {
    const std::size_t n = g.size();
    if (ta) {
      auto ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i) {
        switch (op) {
          case BinaryOp::add:
          case BinaryOp::sub: ga[i] += g[i]; break;
          case BinaryOp::mul: ga[i] += g[i] * bv[i * bstep]; break;
          case BinaryOp::div: ga[i] += g[i] / bv[i * bstep]; break;
        }
      }
    }
    if (tb) {
      auto gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < n; ++i) {
        const double bi = (op == BinaryOp::mul || op == BinaryOp::div) ? bv[i * bstep] : 0.0;
        double d = 0.0;
        switch (op) {
          case BinaryOp::add: d = g[i]; break;
          case BinaryOp::sub: d = -g[i]; break;
          case BinaryOp::mul: d = g[i] * av[i]; break;
          case BinaryOp::div: d = -g[i] * av[i] / (bi * bi); break;
        }
        gb[i * bstep] += d;
      }
    }
  });
}

Tensor elementwise(BinaryOp op, const Tensor& a, double b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(op, a[i], b);
  Tensor result(a.shape(), std::move(out));
  if (!a.tracked()) return result;

  const NodeId ia = a.node();
  double factor = 1.0;
  if (op == BinaryOp::mul) factor = b;
  if (op == BinaryOp::div) factor = 1.0 / b;
  return a.tape()->record(std::move(result), [=](std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(ia);
    if (op == BinaryOp::div) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    }
  });
}

Tensor reduce(ReduceOp op, const Tensor& a) {
  if (a.size() == 0) throw ShapeError("cannot reduce an empty tensor");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  const double n = static_cast<double>(a.size());
  Tensor result = Tensor::scalar(op == ReduceOp::mean ? acc / n : acc);
  if (!a.tracked()) return result;

  const NodeId ia = a.node();
  const double scale = op == ReduceOp::mean ? 1.0 / n : 1.0;
  return a.tape()->record(std::move(result), [=](std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(ia);
    const double v = g[0] * scale;
    for (auto& x : ga) x += v;
  });
}

Tensor activation(const Activation& act, const Tensor& a) {
  const std::size_t n = a.size();
  std::vector<double> out(n), deriv(a.tracked() ? n : 0);
  const bool want = a.tracked();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i];
    double y = x, d = 1.0;
    switch (act.kind) {
      case ActivationKind::identity: break;
      case ActivationKind::relu:
        y = x <= 0.0 ? 0.0 : x;  // NaN propagates
        d = x > 0.0 ? 1.0 : 0.0;
        break;
      case ActivationKind::leaky_relu:
        y = x > 0.0 ? x : act.slope * x;
        d = x > 0.0 ? 1.0 : act.slope;
        break;
      case ActivationKind::tanh:
        y = std::tanh(x);
        d = 1.0 - y * y;
        break;
      case ActivationKind::abs:
        y = std::fabs(x);
        d = x > 0.0 ? 1.0 : -1.0;
        break;
      case ActivationKind::square:
        y = x * x;
        d = 2.0 * x;
        break;
    }
    out[i] = y;
    if (want) deriv[i] = d;
  }
  Tensor result(a.shape(), std::move(out));
  if (!want) return result;

  const NodeId ia = a.node();
  return a.tape()->record(std::move(result), [ia, deriv = std::move(deriv)](
                                                 std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv[i];
  });
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad) {
  require_rank(input, 2, "conv1d input");
  require_rank(weight, 3, "conv1d weight");
  if (weight.dim(1) != input.dim(0)) {
    throw ShapeError(fmt::format("conv1d: weight {} expects {} input channels, input is {}",
                                 shape_string(weight.shape()), weight.dim(1),
                                 shape_string(input.shape())));
  }
  if (bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError(fmt::format("conv1d: bias shape {} does not match {} output channels",
                                 shape_string(bias.shape()), weight.dim(0)));
  }
  const kernels::ConvGeometry g{input.dim(0), weight.dim(0), weight.dim(2), stride, pad,
                                input.dim(1)};
  kernels::validate(g);
  const std::size_t lo = g.out_len();
  std::vector<double> out(g.out_ch * lo);
  kernels::correlate(g, input.data(), weight.data(), bias.data(), out);
  Tensor result({g.out_ch, lo}, std::move(out));

  Tape* tape = common_tape({&input, &weight, &bias});
  if (!tape) return result;

  const bool tx = input.tracked(), tw = weight.tracked(), tb = bias.tracked();
  const NodeId ix = input.node(), iw = weight.node(), ib = bias.node();
  std::vector<double> xv = (tw || tb) ? input.values() : std::vector<double>{};
  std::vector<double> wv = tx ? weight.values() : std::vector<double>{};
  return tape->record(std::move(result), [=, xv = std::move(xv), wv = std::move(wv)](
                                             std::span<const double> gout, Tape& t) {
    if (tx) {
      std::vector<double> gx(g.in_ch * g.in_len);
      kernels::correlate_adjoint(g, gout, wv, gx);
      t.accumulate(ix, gx);
    }
    if (tw || tb) {
      std::vector<double> gw(g.weight_size()), gb(g.out_ch);
      kernels::correlate_weight_grad(g, gout, xv, gw, gb);
      if (tw) t.accumulate(iw, gw);
      if (tb) t.accumulate(ib, gb);
    }
  });
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride, std::size_t pad) {
  require_rank(input, 2, "conv_transpose1d input");
  require_rank(weight, 3, "conv_transpose1d weight");
  if (weight.dim(0) != input.dim(0)) {
    throw ShapeError(fmt::format(
        "conv_transpose1d: weight {} expects {} input channels, input is {}",
        shape_string(weight.shape()), weight.dim(0), shape_string(input.shape())));
  }
  const std::size_t out_ch = weight.dim(1);
  if (bias.shape() != Shape{out_ch}) {
    throw ShapeError(fmt::format("conv_transpose1d: bias shape {} does not match {} channels",
                                 shape_string(bias.shape()), out_ch));
  }
  if (stride < 1) throw ShapeError("conv_transpose1d: stride must be >= 1");
  const std::size_t len = input.dim(1);
  const std::size_t k = weight.dim(2);
  const long long out_len = static_cast<long long>((len - 1) * stride + k) -
                            2 * static_cast<long long>(pad);
  if (out_len < 1) {
    throw ShapeError(fmt::format(
        "conv_transpose1d output would be empty: (L-1)*stride - 2*pad + k = ({}-1)*{} - 2*{} + {}",
        len, stride, pad, k));
  }
  // The forward correlation whose adjoint this op computes.
  const kernels::ConvGeometry g{out_ch, input.dim(0), k, stride, pad,
                                static_cast<std::size_t>(out_len)};
  if (g.out_len() != len) throw ShapeError("conv_transpose1d: inconsistent geometry");

  std::vector<double> out(out_ch * g.in_len);
  kernels::correlate_adjoint(g, input.data(), weight.data(), out);
  for (std::size_t c = 0; c < out_ch; ++c) {
    for (std::size_t j = 0; j < g.in_len; ++j) out[c * g.in_len + j] += bias[c];
  }
  Tensor result({out_ch, g.in_len}, std::move(out));

  Tape* tape = common_tape({&input, &weight, &bias});
  if (!tape) return result;

  const bool tx = input.tracked(), tw = weight.tracked(), tb = bias.tracked();
  const NodeId ix = input.node(), iw = weight.node(), ib = bias.node();
  std::vector<double> xv = tw ? input.values() : std::vector<double>{};
  std::vector<double> wv = tx ? weight.values() : std::vector<double>{};
  return tape->record(std::move(result), [=, xv = std::move(xv), wv = std::move(wv)](
                                             std::span<const double> gout, Tape& t) {
    if (tx) {
      std::vector<double> gx(g.out_ch * len);
      kernels::correlate(g, gout, wv, {}, gx);
      t.accumulate(ix, gx);
    }
    if (tw) {
      std::vector<double> gw(g.weight_size());
      kernels::correlate_weight_grad(g, xv, gout, gw, {});
      t.accumulate(iw, gw);
    }
    if (tb) {
      auto gb = t.grad_buffer(ib);
      for (std::size_t c = 0; c < g.in_ch; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.in_len; ++j) acc += gout[c * g.in_len + j];
        gb[c] += acc;
      }
    }
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_channels lhs");
  require_rank(b, 2, "concat_channels rhs");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError(fmt::format("concat_channels: length mismatch {} vs {}",
                                 shape_string(a.shape()), shape_string(b.shape())));
  }
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  Tensor result({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out));

  Tape* tape = common_tape({&a, &b});
  if (!tape) return result;

  const bool ta = a.tracked(), tb = b.tracked();
  const NodeId ia = a.node(), ib = b.node();
  const std::size_t split = a.size();
  return tape->record(std::move(result), [=](std::span<const double> g, Tape& t) {
    if (ta) t.accumulate(ia, g.first(split));
    if (tb) t.accumulate(ib, g.subspan(split));
  });
}

Tensor slice_channels(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank(a, 2, "slice_channels input");
  if (count == 0 || begin + count > a.dim(0)) {
    throw ShapeError(fmt::format("slice_channels: channels [{}, {}) out of range for {}", begin,
                                 begin + count, shape_string(a.shape())));
  }
  const std::size_t len = a.dim(1);
  const auto first = a.values().begin() + static_cast<std::ptrdiff_t>(begin * len);
  Tensor result({count, len},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * len)));
  if (!a.tracked()) return result;

  const NodeId ia = a.node();
  return a.tape()->record(std::move(result), [=](std::span<const double> g, Tape& t) {
    auto ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin * len + i] += g[i];
  });
}

}  // namespace sig2sig::ad
