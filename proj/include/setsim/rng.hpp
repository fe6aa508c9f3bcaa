#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace setsim {

using Engine = std::mt19937_64;

/// Named sub-streams. Every random decision in the library draws from an engine
/// seeded by (master seed, tag, index) so results never depend on call order
/// across work items or on the number of worker threads.
enum class Stream : std::uint64_t {
  Germs = 1,
  Deletion = 2,
  Permutation = 3,
  SampleX = 4,
  SampleY = 5,
  Bootstrap = 6,
  Placement = 7,
  Shapes = 8,
  Counts = 9,
  Realisation = 10,
  Pair = 11,
  Cell = 12,
  Reference = 13,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream tag, std::uint64_t index = 0) noexcept {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(tag)), index);
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

inline Engine make_engine(std::uint64_t master, Stream tag, std::uint64_t index = 0) {
  return Engine(derive_seed(master, tag, index));
}

// The helpers below avoid std:: distributions, whose output is
// implementation-defined, so seeded runs match across standard libraries.

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  if (n <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(eng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(eng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

/// Poisson variate. Knuth's product method applied to chunks of mean <= 16,
/// using that a sum of independent Poisson variables is Poisson.
inline std::uint64_t poisson(Engine& eng, double mean) {
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double chunk = mean > 16.0 ? 16.0 : mean;
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double prod = uniform01(eng);
    while (prod > limit) {
      ++total;
      prod *= uniform01(eng);
    }
  }
  return total;
}

}  // namespace setsim
