#pragma once

#include <complex>
#include <span>
#include <vector>

namespace sig2sig::fft {

// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N), computed by
// an iterative radix-2 decimation-in-time FFT. N must be a power of two.
std::vector<std::complex<double>> transform(std::span<const std::complex<double>> x);
std::vector<std::complex<double>> transform_real(std::span<const double> x);

// One-sided magnitude spectrum |X[0..N/2]| of a real signal.
struct Spectrum {
  std::vector<double> magnitudes;
};

Spectrum magnitude_spectrum(std::span<const double> x);

}  // namespace sig2sig::fft
