#pragma once

// Test-only oracles: finite differences, direct sliding-window convolution,
// and the naive O(N^2) DFT. None of these call into the code they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/nn.hpp"
#include "sig2sig/rng.hpp"

namespace sig2sig::testing {

inline ad::Tensor random_tensor(ad::Shape shape, SeededRng& rng, double scale = 1.0) {
  const auto n = ad::shape_size(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gauss(0.0, scale);
  return ad::Tensor(std::move(shape), std::move(v));
}

inline std::vector<double> random_vector(std::size_t n, SeededRng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gauss(0.0, scale);
  return v;
}

// Norm-wise relative error ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

using ScalarFn = std::function<ad::Tensor(const std::vector<ad::Tensor>&)>;

// Compares reverse-mode gradients of `fn` at `inputs` with central finite
// differences (step h). Returns the worst per-input relative error.
inline double gradient_check(const ScalarFn& fn, const std::vector<ad::Tensor>& inputs,
                             double h = 1e-6) {
  ad::Tape tape;
  std::vector<ad::Tensor> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.watch(t));
  const ad::Tensor root = fn(leaves);
  tape.backward(root);

  double worst = 0.0;
  std::vector<ad::Tensor> probe = inputs;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    const auto analytic = tape.grad(leaves[which]);
    std::vector<double> numeric(inputs[which].size());
    for (std::size_t j = 0; j < numeric.size(); ++j) {
      const double orig = inputs[which][j];
      probe[which].mutable_data()[j] = orig + h;
      const double up = fn(probe).item();
      probe[which].mutable_data()[j] = orig - h;
      const double down = fn(probe).item();
      probe[which].mutable_data()[j] = orig;
      numeric[j] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

// out[o][t] = b[o] + sum_{i,k} w[o][i][k] * xpad[i][t*stride + k], xpad zero-padded by `pad`.
inline std::vector<double> direct_conv1d(const std::vector<double>& x, std::size_t in_ch,
                                         std::size_t len, const std::vector<double>& w,
                                         std::size_t out_ch, std::size_t k,
                                         const std::vector<double>& b, std::size_t stride,
                                         std::size_t pad) {
  const std::size_t padded = len + 2 * pad;
  std::vector<double> xpad(in_ch * padded, 0.0);
  for (std::size_t i = 0; i < in_ch; ++i)
    for (std::size_t j = 0; j < len; ++j) xpad[i * padded + pad + j] = x[i * len + j];
  const std::size_t lo = (padded - k) / stride + 1;
  std::vector<double> out(out_ch * lo);
  for (std::size_t o = 0; o < out_ch; ++o) {
    for (std::size_t t = 0; t < lo; ++t) {
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < in_ch; ++i)
        for (std::size_t q = 0; q < k; ++q)
          acc += w[(o * in_ch + i) * k + q] * xpad[i * padded + t * stride + q];
      out[o * lo + t] = acc;
    }
  }
  return out;
}

inline std::vector<std::complex<double>> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce k*j mod n first so the angle stays small and accurate.
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) /
                           static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Same check for every tensor of a parameter store; `fn` maps bound
// parameters to a scalar loss. Values are perturbed in place and restored.
inline double store_gradient_check(nn::ParamStore& store,
                                   const std::function<ad::Tensor(const nn::BoundParams&)>& fn,
                                   double h = 1e-6) {
  ad::Tape tape;
  const nn::BoundParams bound(store, &tape);
  tape.backward(fn(bound));
  const auto analytic = bound.gradients();

  double worst = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::vector<double> numeric(analytic[i].size());
    for (std::size_t j = 0; j < numeric.size(); ++j) {
      const double orig = store.mutable_values(i)[j];
      store.mutable_values(i)[j] = orig + h;
      const double up = fn(nn::BoundParams(store, nullptr)).item();
      store.mutable_values(i)[j] = orig - h;
      const double down = fn(nn::BoundParams(store, nullptr)).item();
      store.mutable_values(i)[j] = orig;
      numeric[j] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace sig2sig::testing
