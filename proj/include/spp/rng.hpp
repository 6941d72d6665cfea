#pragma once

// Seeded random streams.
//
// Every random draw in the library comes from a std::mt19937_64 engine whose
// seed is derived with SplitMix64 from (master seed, stream tag, index).
// Distinct components and distinct replication rounds therefore own
// independent streams: growing m, n or p never reshuffles unrelated draws.

#include <cstdint>
#include <random>

namespace spp::rng {

enum class Stream : std::uint64_t {
  anchor = 1,
  smooth_row = 2,
  halfspace = 3,
  ground_truth = 4,
  sampling = 5,
  estimator = 6,
  verify = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream tag, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(tag)) ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
  return std::mt19937_64(stream_seed(seed, tag, index));
}

}  // namespace spp::rng
