#pragma once

#include <cstddef>
#include <cstdint>

namespace sig2sig {

// SplitMix64 stream shared by dataset synthesis, weight init and shuffling.
// The output sequence is a pure function of the seed on every platform.
//
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//              z =  z ^ (z >> 31)
//
// uniform() = (z >> 11) * 2^-53, in [0, 1).
// gauss() uses Box-Muller on two consecutive uniforms (u1, u2):
//   r = sqrt(-2 ln(1 - u1)); the first call returns mu + sigma * r cos(2 pi u2),
//   the second reuses the cached r sin(2 pi u2).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  // Requires lo < hi.
  double uniform(double lo, double hi);
  double gauss(double mu, double sigma) noexcept;
  // Uniform integer in [0, n), n >= 1: floor(uniform() * n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sig2sig
