#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "s4tok/types.hpp"

namespace s4tok {

// Every random draw in the library goes through these helpers so results
// depend only on the mt19937_64 stream, which the standard pins exactly.
using Rng = std::mt19937_64;

constexpr std::uint64_t
splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the `stream`-th independent sub-generator of `seed`.
constexpr std::uint64_t
derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double
uniform_unit(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), unbiased.
inline std::uint64_t
uniform_below(Rng& rng, std::uint64_t n)
{
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Standard normal via Box-Muller.
inline double
standard_normal(Rng& rng)
{
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0)
    u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Uniform random subset of `count` elements of `items`, returned in the
/// original relative order. `count` ≥ items.size() returns `items`.
IndexList sample_without_replacement(const IndexList& items,
                                     std::size_t count,
                                     Rng& rng);

/// Draws an index with probability proportional to `weights[i]`.
Index draw_multinomial(const std::vector<double>& weights, Rng& rng);

} // namespace s4tok
