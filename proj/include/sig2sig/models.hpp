#pragma once

// 1D U-Net generator (three down/up levels with skip connections) and 1D
// PatchGAN discriminator.

#include <array>
#include <cstddef>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/nn.hpp"
#include "sig2sig/rng.hpp"

namespace sig2sig::models {

inline constexpr std::size_t kLevels = 3;
inline constexpr double kLeakySlope = 0.2;

struct GeneratorArch {
  std::size_t length = 128;
  std::size_t base_channels = 32;
  std::size_t kernel = 16;
  std::size_t stride = 2;
  std::size_t head_kernel = 3;  // odd; stride-1 projection to one channel

  std::size_t pad() const noexcept { return (kernel - stride) / 2; }
  // Throws ConfigError when the geometry cannot form a length-preserving U-Net.
  void validate() const;
};

struct DiscriminatorArch {
  std::size_t length = 128;
  std::size_t base_channels = 32;
  std::size_t kernel = 16;
  std::size_t stride = 2;
  std::size_t head_kernel = 3;

  std::size_t pad() const noexcept { return (kernel - stride) / 2; }
  void validate() const;
  // Length of the patch-score map.
  std::size_t patch_count() const;
  // Input samples that influence a single patch score.
  std::size_t receptive_field() const;
};

struct Generator {
  GeneratorArch arch;
  // down[i]: conv (stride) -> instance norm -> LeakyReLU(0.2)
  std::array<std::vector<nn::LayerSpec>, kLevels> down;
  // up[i]: transposed conv (stride) -> instance norm -> ReLU; up[i] consumes
  // up[i+1]'s output concatenated with down[i]'s output (innermost: down[2] only).
  std::array<std::vector<nn::LayerSpec>, kLevels> up;
  // one-channel stride-1 conv -> tanh, no norm
  std::vector<nn::LayerSpec> head;
  nn::ParamStore params;

  ad::Tensor forward(const nn::BoundParams& bound, const ad::Tensor& x) const;
};

struct Discriminator {
  DiscriminatorArch arch;
  std::vector<nn::LayerSpec> layers;
  nn::ParamStore params;

  // Raw patch scores [1, patch_count()].
  ad::Tensor forward(const nn::BoundParams& bound, const ad::Tensor& x) const;
};

Generator build_generator(const GeneratorArch& arch, SeededRng& rng);
Discriminator build_discriminator(const DiscriminatorArch& arch, SeededRng& rng);

// Untracked inference; x must be [1, arch.length].
ad::Tensor generate(const Generator& gen, const ad::Tensor& x);

}  // namespace sig2sig::models
