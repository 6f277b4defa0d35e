#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "nero/detmath.hpp"

namespace nero {

/// Counter-based deterministic generator. The stream is a function of
/// (seed, counter) only:
///
///   out_i = mix64(seed + i * 0x9E3779B97F4A7C15)      (splitmix64)
///
/// Gaussian draws use Box-Muller with two uniforms per draw, computed
/// with the fixed log/cos from detmath.hpp plus IEEE sqrt (which is
/// correctly rounded everywhere), so identical seeds give bit-identical
/// streams on every platform and golden-run tests are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * detmath::det_log(u1)) *
           detmath::det_cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n) via 128-bit multiply.
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  void fill_normal(std::span<double> out, double sigma = 1.0) {
    for (double& x : out) x = sigma * normal();
  }

  /// Independent stream derived from this seed and a stream id.
  Rng derive(std::uint64_t stream) const {
    std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ULL + stream * 0x8CB92BA72F3D8DD7ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return Rng(z ^ (z >> 31));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace nero
