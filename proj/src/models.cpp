#include "sig2sig/models.hpp"

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig::models {

using ad::Tensor;

namespace {

void validate_common(std::size_t length, std::size_t base, std::size_t kernel,
                     std::size_t stride, std::size_t head_kernel) {
  if (base < 1 || kernel < 1 || stride < 1) {
    throw ConfigError(fmt::format("invalid architecture: base_channels={} kernel={} stride={}",
                                  base, kernel, stride));
  }
  if (kernel < stride || (kernel - stride) % 2 != 0) {
    throw ConfigError(fmt::format(
        "kernel {} and stride {}: (kernel - stride) must be even and non-negative so that "
        "padding (kernel - stride)/2 is integral",
        kernel, stride));
  }
  if (head_kernel % 2 == 0) {
    throw ConfigError(fmt::format("head_kernel must be odd, got {}", head_kernel));
  }
  std::size_t factor = 1;
  for (std::size_t i = 0; i < kLevels; ++i) factor *= stride;
  if (length == 0 || length % factor != 0) {
    throw ConfigError(fmt::format("signal length {} must be divisible by stride^{} = {}", length,
                                  kLevels, factor));
  }
}

void check_input(const Tensor& x, std::size_t length) {
  if (x.shape() != ad::Shape{1, length}) {
    throw ShapeError(fmt::format("network expects a [1, {}] signal, got {}", length,
                                 ad::shape_string(x.shape())));
  }
}

}  // namespace

void GeneratorArch::validate() const {
  validate_common(length, base_channels, kernel, stride, head_kernel);
}

void DiscriminatorArch::validate() const {
  validate_common(length, base_channels, kernel, stride, head_kernel);
  if (patch_count() < 2) {
    throw ConfigError(fmt::format(
        "discriminator patch map has length {} < 2; it would degenerate to a global "
        "discriminator",
        patch_count()));
  }
}

std::size_t DiscriminatorArch::patch_count() const {
  std::size_t len = length;
  for (std::size_t i = 0; i < kLevels; ++i) len /= stride;
  return len;
}

std::size_t DiscriminatorArch::receptive_field() const {
  std::size_t field = 1, jump = 1;
  for (std::size_t i = 0; i < kLevels; ++i) {
    field += (kernel - 1) * jump;
    jump *= stride;
  }
  return field + (head_kernel - 1) * jump;
}

Tensor Generator::forward(const nn::BoundParams& bound, const Tensor& x) const {
  check_input(x, arch.length);
  std::array<Tensor, kLevels> skips;
  Tensor h = x;
  for (std::size_t i = 0; i < kLevels; ++i) {
    h = nn::forward(down[i], bound, h);
    skips[i] = h;
  }
  h = nn::forward(up[kLevels - 1], bound, h);
  for (std::size_t i = kLevels - 1; i-- > 0;) {
    h = nn::forward(up[i], bound, ad::concat_channels(h, skips[i]));
  }
  return nn::forward(head, bound, h);
}

Tensor Discriminator::forward(const nn::BoundParams& bound, const Tensor& x) const {
  check_input(x, arch.length);
  return nn::forward(layers, bound, x);
}

Generator build_generator(const GeneratorArch& arch, SeededRng& rng) {
  arch.validate();
  Generator gen;
  gen.arch = arch;
  const std::size_t c = arch.base_channels, k = arch.kernel, s = arch.stride, p = arch.pad();
  const std::array<std::size_t, kLevels + 1> width{1, c, 2 * c, 4 * c};

  // Convs feeding a norm carry no bias; the mean subtraction would cancel it.
  for (std::size_t i = 0; i < kLevels; ++i) {
    const auto name = fmt::format("down{}", i + 1);
    gen.down[i] = {nn::conv_down(name + ".conv", width[i], width[i + 1], k, s, p, false),
                   nn::norm(name + ".norm", width[i + 1]),
                   nn::act({ad::ActivationKind::leaky_relu, kLeakySlope})};
  }
  // Up level i produces down level i's input width (level 0 produces c so the
  // head can project to one channel).
  for (std::size_t i = 0; i < kLevels; ++i) {
    const auto name = fmt::format("up{}", i + 1);
    const std::size_t in = i + 1 == kLevels ? width[i + 1] : 2 * width[i + 1];
    const std::size_t out = i == 0 ? c : width[i];
    gen.up[i] = {nn::conv_up(name + ".conv", in, out, k, s, p, false), nn::norm(name + ".norm", out),
                 nn::act({ad::ActivationKind::relu})};
  }
  gen.head = {nn::conv_down("head.conv", c, 1, arch.head_kernel, 1, (arch.head_kernel - 1) / 2),
              nn::act({ad::ActivationKind::tanh})};

  for (const auto& block : gen.down)
    for (const auto& layer : block) nn::declare_params(layer, gen.params);
  for (std::size_t i = kLevels; i-- > 0;)
    for (const auto& layer : gen.up[i]) nn::declare_params(layer, gen.params);
  for (const auto& layer : gen.head) nn::declare_params(layer, gen.params);
  nn::init_weights(gen.params, rng);
  return gen;
}

Discriminator build_discriminator(const DiscriminatorArch& arch, SeededRng& rng) {
  arch.validate();
  Discriminator disc;
  disc.arch = arch;
  const std::size_t c = arch.base_channels, k = arch.kernel, s = arch.stride, p = arch.pad();
  const std::array<std::size_t, kLevels + 1> width{1, c, 2 * c, 4 * c};
  const ad::Activation leaky{ad::ActivationKind::leaky_relu, kLeakySlope};

  for (std::size_t i = 0; i < kLevels; ++i) {
    const auto name = fmt::format("conv{}", i + 1);
    disc.layers.push_back(nn::conv_down(name + ".conv", width[i], width[i + 1], k, s, p, i == 0));
    if (i > 0) disc.layers.push_back(nn::norm(name + ".norm", width[i + 1]));
    disc.layers.push_back(nn::act(leaky));
  }
  disc.layers.push_back(
      nn::conv_down("head.conv", width[kLevels], 1, arch.head_kernel, 1, (arch.head_kernel - 1) / 2));

  for (const auto& layer : disc.layers) nn::declare_params(layer, disc.params);
  nn::init_weights(disc.params, rng);
  return disc;
}

Tensor generate(const Generator& gen, const Tensor& x) {
  return gen.forward(nn::BoundParams(gen.params, nullptr), x);
}

}  // namespace sig2sig::models
