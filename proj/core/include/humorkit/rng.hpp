#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace humorkit {

using Rng = std::mt19937_64;

// splitmix64; used to spread seeds so that nearby master seeds and task
// counters do not produce correlated streams.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed for task `task` of a computation with master seed `master`.
/// Identical regardless of which thread runs the task.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t task) {
  return splitmix64(splitmix64(master) ^ splitmix64(task + 0x51ed2701a9b5d34full));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Unbiased integer in [0, n) via rejection sampling. Results depend only on
/// the engine stream, not on any standard-library distribution internals.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via the polar method (deterministic per stream).
inline double standard_normal(Rng& rng) {
  double u, v, s;
  do {
    u = 2.0 * uniform_real(rng) - 1.0;
    v = 2.0 * uniform_real(rng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

/// Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// 0, 1, ..., n-1 shuffled.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx, rng);
  return idx;
}

}  // namespace humorkit
