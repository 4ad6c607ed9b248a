#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gkdr {

// SplitMix64, used for seed derivation so that replication streams are
// decorrelated even for adjacent master seeds.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  SplitMix64 mix(master ^ (0xA5A5A5A55A5A5A5AULL + stream * 0x9E3779B97F4A7C15ULL));
  mix.next();
  return mix.next();
}

// Portable RNG: std::mt19937_64 has a fully specified output sequence, and
// all variate transforms below are implemented explicitly (the standard
// library distributions are implementation-defined and would break
// cross-platform reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(SplitMix64(seed).next()) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [low, high).
  double uniform(double low, double high) {
    return low + (high - low) * uniform01();
  }

  /// Gaussian via Box-Muller; consumes exactly two draws per variate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    // u1 in (0, 1] so that log() is finite
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean + stddev * z;
  }

  /// Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0} >> __builtin_clzll(n - 1 | 1);
    std::uint64_t r;
    do {
      r = next_u64() & mask;
    } while (r >= n);
    return r;
  }

  /// Fisher-Yates; std::shuffle is implementation-defined so it is hand-rolled.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gkdr
