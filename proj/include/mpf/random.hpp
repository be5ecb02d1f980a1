#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace mpf {

using Rng = std::mt19937_64;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, stream) pair; used to give parallel runs
// their own generators.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed2701)));
}

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// stddev == 0 degenerates to the mean (used by zero-noise models).
inline double draw_normal(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(rng);
}

// log N(x; mean, stddev^2). The stddev == 0 limit is treated as a point
// mass: 0 on the point, -inf elsewhere.
inline double gaussian_logpdf(double x, double mean, double stddev) {
  if (stddev == 0.0) {
    return x == mean ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double z = (x - mean) / stddev;
  return -0.5 * (kLog2Pi + z * z) - std::log(stddev);
}

}  // namespace mpf
