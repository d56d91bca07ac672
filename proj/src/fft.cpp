#include "sig2sig/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig::fft {

std::vector<std::complex<double>> transform(std::span<const std::complex<double>> x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ShapeError(fmt::format("FFT length must be a power of two, got {}", n));
  }
  std::vector<std::complex<double>> a(x.begin(), x.end());

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  // Twiddles for the full length; stage `len` uses every (n / len)-th one.
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[start + k];
        const auto v = a[start + k + half] * twiddle[k * step];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
  return a;
}

std::vector<std::complex<double>> transform_real(std::span<const double> x) {
  std::vector<std::complex<double>> c(x.begin(), x.end());
  return transform(c);
}

Spectrum magnitude_spectrum(std::span<const double> x) {
  const auto bins = transform_real(x);
  Spectrum s;
  s.magnitudes.resize(x.size() / 2 + 1);
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) s.magnitudes[k] = std::abs(bins[k]);
  return s;
}

}  // namespace sig2sig::fft
