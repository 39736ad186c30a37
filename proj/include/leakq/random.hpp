#pragma once

// Reproducible random streams.
//
// A Stream is a std::mt19937_64 engine whose 64-bit seed is derived from
// (master seed, replication index, substream index) by chained SplitMix64
// mixing. Uniforms take the top 53 bits of each engine output. Normals use
// Box-Muller (both variates are used, in order). Exponential and Weibull
// variates use inverse-CDF sampling. No std::*_distribution is used, so
// streams are identical across standard-library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace leakq {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                           std::uint64_t substream = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ replication) ^ (substream * 0xD1B54A32D192ED03ULL));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Stream(std::uint64_t master, std::uint64_t replication, std::uint64_t substream)
      : engine_(derive_seed(master, replication, substream)) {}

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1)
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double exponential(double mean) { return -mean * std::log(uniform_open()); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace leakq
