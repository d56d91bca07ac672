#pragma once

// Synthetic dataset of paired, tunably (a)synchronous bandlimited signals.
//
// Each pair shares K latent sinusoids (frequency f_k in cycles per window,
// amplitude a_k, phase phi_k):
//
//   x[n] = sum_k a_k        sin(2 pi f_k n / N + phi_k)
//   y[n] = sum_k w(f_k) a_k sin(2 pi f_k n / N + phi_k + psi_k)
//
// with per-component phase offsets psi_k in [0, max_phase) and the spectral
// tilt w(f) = 1 / (1 + f / f_hi) (w = 1 when tilt is disabled). Both signals
// are scaled to unit peak magnitude and rounded to float32 precision, which
// makes the in-memory values identical to what the .sig files hold.
//
// Draw order from the seeded stream, pair after pair (training pairs first,
// then test pairs): for k = 0..K-1 the uniforms (base, jitter, amplitude,
// phase); then for k = 0..K-1 one uniform for psi_k.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sig2sig/keyvalue.hpp"
#include "sig2sig/rng.hpp"

namespace sig2sig::dataset {

struct DatasetConfig {
  std::size_t window_length = 128;
  std::size_t n_components = 4;
  double f_lo = 1.0;  // cycles per window
  double f_hi = 12.0;
  double max_phase = std::numbers::pi / 2.0;
  double amp_lo = 0.2;
  double amp_hi = 1.0;
  double freq_jitter = 0.25;  // cycles per window
  bool tilt = true;
  std::size_t n_train_pairs = 16;
  std::size_t n_test_pairs = 4;
  std::uint64_t seed = 0;

  // Throws ConfigError on any violated constraint.
  void validate() const;

  kv::Pairs to_pairs() const;
  // Returns false when `key` is not a dataset key.
  bool set(const std::string& key, const std::string& value);
};

struct Component {
  double freq = 0.0;
  double amp = 0.0;
  double phase = 0.0;
  double phase_offset = 0.0;  // psi, applied to the Y side only
};

struct SignalPair {
  std::vector<double> x;
  std::vector<double> y;
  // Empty for pairs loaded from disk.
  std::vector<Component> latents;
};

struct SignalDataset {
  DatasetConfig config;
  // Training pairs keep their generation alignment in memory for diagnostics;
  // training draws X and Y independently and never uses it.
  std::vector<SignalPair> train;
  std::vector<SignalPair> test;

  std::vector<std::vector<double>> train_x() const;
  std::vector<std::vector<double>> train_y() const;
};

double tilt_weight(const DatasetConfig& cfg, double freq);

// Builds the (x, y) arrays from explicit latents.
SignalPair synthesize(const DatasetConfig& cfg, std::vector<Component> latents);

SignalPair generate_pair(const DatasetConfig& cfg, SeededRng& rng);

SignalDataset generate_dataset(const DatasetConfig& cfg);

// .sig: "SIG1", u32 version (1), u32 count, u32 length, count*length float32,
// all little-endian.
void write_signals(const std::filesystem::path& file,
                   std::span<const std::vector<double>> signals);
std::vector<std::vector<double>> read_signals(const std::filesystem::path& file);

// Directory with train_x.sig, train_y.sig, test_x.sig, test_y.sig, config.txt.
void save_dataset(const SignalDataset& ds, const std::filesystem::path& dir);
SignalDataset load_dataset(const std::filesystem::path& dir);

}  // namespace sig2sig::dataset
