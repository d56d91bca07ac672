#include "sig2sig/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

#ifdef SIG2SIG_OPENMP
#include <omp.h>
#endif

namespace sig2sig::kernels {

namespace {

using Index = long long;

// Skip thread start-up for tiny problems; results do not depend on it.
constexpr std::size_t kParallelWork = 1 << 14;

void check_sizes(const ConvGeometry& g, std::size_t x, std::size_t w, std::size_t out) {
  const std::size_t lo = g.out_len();
  if (x != g.in_ch * g.in_len || w != g.weight_size() || out != g.out_ch * lo) {
    throw ShapeError(fmt::format(
        "conv buffers do not match geometry in_ch={} out_ch={} kernel={} in_len={} "
        "(got x={}, w={}, out={})",
        g.in_ch, g.out_ch, g.kernel, g.in_len, x, w, out));
  }
}

}  // namespace

std::size_t ConvGeometry::out_len() const noexcept {
  if (stride == 0 || in_len + 2 * pad < kernel) return 0;
  return (in_len + 2 * pad - kernel) / stride + 1;
}

void validate(const ConvGeometry& g) {
  if (g.stride < 1 || g.kernel < 1 || g.in_ch < 1 || g.out_ch < 1) {
    throw ShapeError(fmt::format("invalid conv geometry: in_ch={} out_ch={} kernel={} stride={}",
                                 g.in_ch, g.out_ch, g.kernel, g.stride));
  }
  if (g.out_len() < 1) {
    throw ShapeError(fmt::format(
        "conv output would be empty: length {} + 2*pad {} < kernel {} (stride {})", g.in_len,
        g.pad, g.kernel, g.stride));
  }
}

int max_threads() noexcept {
#ifdef SIG2SIG_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) noexcept {
#ifdef SIG2SIG_OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

// The fast kernels work on a zero-padded copy of the input split into
// `stride` phases, phase r holding samples r, r + s, r + 2s, ... With that
// layout tap k of output t reads phase (k mod s) at index t + k / s, so all
// inner loops are unit-stride.
namespace {

struct Padded {
  std::size_t len = 0;     // in_len + 2 pad
  std::size_t phase = 0;   // samples per phase
  std::vector<double> flat;    // [in_ch, len]
  std::vector<double> phases;  // [in_ch, stride, phase]
};

Padded pad_input(const ConvGeometry& g, std::span<const double> x, bool want_phases) {
  Padded p;
  p.len = g.in_len + 2 * g.pad;
  p.phase = (p.len + g.stride - 1) / g.stride;
  p.flat.assign(g.in_ch * p.len, 0.0);
  for (std::size_t i = 0; i < g.in_ch; ++i) {
    std::copy_n(x.data() + i * g.in_len, g.in_len, p.flat.data() + i * p.len + g.pad);
  }
  if (want_phases) {
    p.phases.assign(g.in_ch * g.stride * p.phase, 0.0);
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      for (std::size_t j = 0; j < p.len; ++j) {
        p.phases[(i * g.stride + j % g.stride) * p.phase + j / g.stride] = p.flat[i * p.len + j];
      }
    }
  }
  return p;
}

}  // namespace

void correlate(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
               std::span<const double> bias, std::span<double> out) {
  check_sizes(g, x.size(), w.size(), out.size());
  const std::size_t lo = g.out_len();
  const std::size_t s = g.stride;
  const Padded px = pad_input(g, x, true);
  const Index outer = static_cast<Index>(g.out_ch);
  [[maybe_unused]] const bool par = g.out_ch * lo * g.in_ch * g.kernel >= kParallelWork;

#ifdef SIG2SIG_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (Index oi = 0; oi < outer; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    double* row = out.data() + o * lo;
    std::fill(row, row + lo, bias.empty() ? 0.0 : bias[o]);
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      const double* wk = w.data() + (o * g.in_ch + i) * g.kernel;
      const double* phases = px.phases.data() + i * s * px.phase;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const double wv = wk[k];
        const double* src = phases + (k % s) * px.phase + k / s;
        for (std::size_t t = 0; t < lo; ++t) row[t] += wv * src[t];
      }
    }
  }
}

void correlate_adjoint(const ConvGeometry& g, std::span<const double> gout,
                       std::span<const double> w, std::span<double> gx) {
  check_sizes(g, gx.size(), w.size(), gout.size());
  const std::size_t lo = g.out_len();
  const std::size_t s = g.stride;
  const std::size_t padded_len = g.in_len + 2 * g.pad;
  const std::size_t phase_len = (padded_len + s - 1) / s;
  const Index outer = static_cast<Index>(g.in_ch);
  [[maybe_unused]] const bool par = g.out_ch * lo * g.in_ch * g.kernel >= kParallelWork;

#ifdef SIG2SIG_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (Index ii = 0; ii < outer; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::vector<double> phases(s * phase_len, 0.0);
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      const double* go = gout.data() + o * lo;
      const double* wk = w.data() + (o * g.in_ch + i) * g.kernel;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const double wv = wk[k];
        double* dst = phases.data() + (k % s) * phase_len + k / s;
        for (std::size_t t = 0; t < lo; ++t) dst[t] += wv * go[t];
      }
    }
    double* row = gx.data() + i * g.in_len;
    for (std::size_t j = 0; j < g.in_len; ++j) {
      const std::size_t q = j + g.pad;
      row[j] = phases[(q % s) * phase_len + q / s];
    }
  }
}

void correlate_weight_grad(const ConvGeometry& g, std::span<const double> gout,
                           std::span<const double> x, std::span<double> gw,
                           std::span<double> gb) {
  check_sizes(g, x.size(), gw.size(), gout.size());
  if (!gb.empty() && gb.size() != g.out_ch) {
    throw ShapeError(fmt::format("bias grad has {} entries, expected {}", gb.size(), g.out_ch));
  }
  const std::size_t lo = g.out_len();
  const std::size_t s = g.stride;
  const Padded px = pad_input(g, x, false);
  const Index outer = static_cast<Index>(g.out_ch);
  [[maybe_unused]] const bool par = g.out_ch * lo * g.in_ch * g.kernel >= kParallelWork;

#ifdef SIG2SIG_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (Index oi = 0; oi < outer; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    const double* go = gout.data() + o * lo;
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      const double* xi = px.flat.data() + i * px.len;
      double* wk = gw.data() + (o * g.in_ch + i) * g.kernel;
      std::fill(wk, wk + g.kernel, 0.0);
      for (std::size_t t = 0; t < lo; ++t) {
        const double gv = go[t];
        const double* src = xi + t * s;
        for (std::size_t k = 0; k < g.kernel; ++k) wk[k] += gv * src[k];
      }
    }
    if (!gb.empty()) {
      double acc = 0.0;
      for (std::size_t t = 0; t < lo; ++t) acc += go[t];
      gb[o] = acc;
    }
  }
}

namespace reference {

namespace {

bool input_index(const ConvGeometry& g, std::size_t t, std::size_t k, std::size_t& j) {
  const Index pos = static_cast<Index>(t * g.stride + k) - static_cast<Index>(g.pad);
  if (pos < 0 || pos >= static_cast<Index>(g.in_len)) return false;
  j = static_cast<std::size_t>(pos);
  return true;
}

}  // namespace

void correlate(const ConvGeometry& g, std::span<const double> x, std::span<const double> w,
               std::span<const double> bias, std::span<double> out) {
  check_sizes(g, x.size(), w.size(), out.size());
  const std::size_t lo = g.out_len();
  for (std::size_t o = 0; o < g.out_ch; ++o) {
    for (std::size_t t = 0; t < lo; ++t) {
      double acc = bias.empty() ? 0.0 : bias[o];
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        for (std::size_t k = 0; k < g.kernel; ++k) {
          std::size_t j = 0;
          if (input_index(g, t, k, j)) {
            acc += w[(o * g.in_ch + i) * g.kernel + k] * x[i * g.in_len + j];
          }
        }
      }
      out[o * lo + t] = acc;
    }
  }
}

void correlate_adjoint(const ConvGeometry& g, std::span<const double> gout,
                       std::span<const double> w, std::span<double> gx) {
  check_sizes(g, gx.size(), w.size(), gout.size());
  const std::size_t lo = g.out_len();
  std::fill(gx.begin(), gx.end(), 0.0);
  for (std::size_t o = 0; o < g.out_ch; ++o) {
    for (std::size_t t = 0; t < lo; ++t) {
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        for (std::size_t k = 0; k < g.kernel; ++k) {
          std::size_t j = 0;
          if (input_index(g, t, k, j)) {
            gx[i * g.in_len + j] += w[(o * g.in_ch + i) * g.kernel + k] * gout[o * lo + t];
          }
        }
      }
    }
  }
}

void correlate_weight_grad(const ConvGeometry& g, std::span<const double> gout,
                           std::span<const double> x, std::span<double> gw,
                           std::span<double> gb) {
  check_sizes(g, x.size(), gw.size(), gout.size());
  const std::size_t lo = g.out_len();
  std::fill(gw.begin(), gw.end(), 0.0);
  std::fill(gb.begin(), gb.end(), 0.0);
  for (std::size_t o = 0; o < g.out_ch; ++o) {
    for (std::size_t t = 0; t < lo; ++t) {
      if (!gb.empty()) gb[o] += gout[o * lo + t];
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        for (std::size_t k = 0; k < g.kernel; ++k) {
          std::size_t j = 0;
          if (input_index(g, t, k, j)) {
            gw[(o * g.in_ch + i) * g.kernel + k] += gout[o * lo + t] * x[i * g.in_len + j];
          }
        }
      }
    }
  }
}

}  // namespace reference

}  // namespace sig2sig::kernels
