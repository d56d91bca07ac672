#include "sig2sig/rng.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig {

std::uint64_t SeededRng::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ConfigError(fmt::format("uniform({}, {}) needs lo < hi", lo, hi));
  return lo + (hi - lo) * uniform();
}

double SeededRng::gauss(double mu, double sigma) noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return mu + sigma * cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return mu + sigma * r * std::cos(theta);
}

std::size_t SeededRng::below(std::size_t n) {
  if (n == 0) throw ConfigError("below(0) has no valid outcome");
  const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace sig2sig
