#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ghsel {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for a (seed, stream) pair, e.g. one per chain or replicate.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n). The distribution is fixed by this code, not by the
/// standard library, so streams are reproducible across toolchains.
inline int uniform_index(Rng& rng, int n) {
  const int k = static_cast<int>(uniform01(rng) * n);
  return k < n ? k : n - 1;
}

/// Exp(1) by inversion.
inline double standard_exponential(Rng& rng) { return -std::log1p(-uniform01(rng)); }

/// N(0, 1) by Box-Muller; one draw per pair of uniforms.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ghsel
