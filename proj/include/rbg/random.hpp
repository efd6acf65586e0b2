#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rbg {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream keyed by (seed, k1, k2, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
  std::uint64_t h = mix64(seed);
  for (auto k : keys)
    h = mix64(h ^ mix64(k));
  return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
  return Rng{derive_seed(seed, keys)};
}

} // namespace rbg
