// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_RANDOM_HPP
#define DROBAS_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace drobas {

using Rng = std::mt19937_64;

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Labels for the independent substreams of one experiment seed.
enum class Stream : std::uint64_t {
  Train = 1,
  Test = 2,
  Model = 3,
  Verify = 4,
};

/// Derives a generator from a root seed and a path of counters.
///
/// Distinct paths give statistically independent streams; the same path always
/// gives the same stream, so callers never share a generator across tasks.
inline Rng make_stream(std::uint64_t seed, std::span<const std::uint64_t> path) {
  std::uint64_t state = detail::splitmix64(seed);
  for (const auto step : path) {
    state = detail::splitmix64(state ^ detail::splitmix64(step + 0x632be59bd9b4e019ULL));
  }
  const std::uint64_t extra = detail::splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(state), static_cast<std::uint32_t>(state >> 32),
                    static_cast<std::uint32_t>(extra), static_cast<std::uint32_t>(extra >> 32)};
  return Rng{seq};
}

inline Rng make_stream(std::uint64_t seed, Stream stream,
                       std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint64_t> full{static_cast<std::uint64_t>(stream)};
  full.insert(full.end(), path.begin(), path.end());
  return make_stream(seed, std::span<const std::uint64_t>{full});
}

}  // namespace drobas

#endif
