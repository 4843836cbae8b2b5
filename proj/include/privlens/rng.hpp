#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace privlens::rng {

// Counter-based streams: every draw is a pure function of (key, counter),
// so results do not depend on evaluation order or thread scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed splitting rule: child = splitmix64(parent ^ splitmix64(tag)).
inline std::uint64_t derive(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(parent ^ splitmix64(tag));
}

template <typename... Tags>
std::uint64_t derive(std::uint64_t parent, std::uint64_t tag, Tags... rest) {
  return derive(derive(parent, tag), static_cast<std::uint64_t>(rest)...);
}

/// Uniform double in the open interval (0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t bits = splitmix64(key ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform double in (lo, hi).
inline double uniform(std::uint64_t key, std::uint64_t counter, double lo, double hi) {
  return lo + (hi - lo) * uniform(key, counter);
}

/// Standard normal draw via Box-Muller. Counters 2i and 2i+1 share one
/// uniform pair and return the cosine and sine branch respectively.
inline double normal(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t pair = counter & ~std::uint64_t{1};
  const double u1 = uniform(key, pair);
  const double u2 = uniform(key, pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (counter & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
}

}  // namespace privlens::rng
