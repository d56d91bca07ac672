#pragma once

// Direct 1D cross-correlation kernels shared by conv1d and conv_transpose1d.
//
// Layouts are row-major: signals are [channels, length], weights are
// [out_ch, in_ch, kernel] from the point of view of the forward correlation.
// The top-level functions parallelize over whole output rows with OpenMP;
// every output element is produced by a single thread in a fixed summation
// order, so results are bit-identical for any thread count. The functions in
// `reference` are plain textbook loops kept for testing and benchmarking.

#include <cstddef>
#include <span>

namespace sig2sig::kernels {

struct ConvGeometry {
  std::size_t in_ch = 1;
  std::size_t out_ch = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t in_len = 1;

  // floor((in_len + 2 pad - kernel) / stride) + 1; 0 when the window does not fit.
  std::size_t out_len() const noexcept;
  std::size_t weight_size() const noexcept { return out_ch * in_ch * kernel; }
};

// Throws ShapeError unless stride >= 1 and out_len() >= 1.
void validate(const ConvGeometry& g);

// out[o, t] = bias[o] + sum_{i,k} w[o, i, k] * x[i, t*stride + k - pad]
// `bias` may be empty.
void correlate(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
               std::span<const double> bias, std::span<double> out);

// Adjoint of `correlate` with respect to x (no bias):
// gx[i, j] = sum_{o,k,t : t*stride + k - pad == j} w[o, i, k] * gout[o, t]
void correlate_adjoint(const ConvGeometry& g, std::span<const double> gout,
                       std::span<const double> w, std::span<double> gx);

// gw[o, i, k] = sum_t gout[o, t] * x[i, t*stride + k - pad]; gb[o] = sum_t gout[o, t].
// `gb` may be empty.
void correlate_weight_grad(const ConvGeometry& g, std::span<const double> gout,
                           std::span<const double> x, std::span<double> gw,
                           std::span<double> gb);

// Number of OpenMP threads the kernels will use (1 without OpenMP).
int max_threads() noexcept;
void set_threads(int n) noexcept;

namespace reference {

void correlate(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
               std::span<const double> bias, std::span<double> out);
void correlate_adjoint(const ConvGeometry& g, std::span<const double> gout,
                       std::span<const double> w, std::span<double> gx);
void correlate_weight_grad(const ConvGeometry& g, std::span<const double> gout,
                           std::span<const double> x, std::span<double> gw,
                           std::span<double> gb);

}  // namespace reference

}  // namespace sig2sig::kernels
