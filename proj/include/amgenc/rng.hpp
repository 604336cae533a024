#pragma once

#include <cstdint>
#include <random>

namespace amgenc {

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed for (seed, stream, index). Draws keyed by atom index
/// do not depend on the order atoms are processed in.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(mix64(seed) ^ stream) + index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(derive_seed(seed, stream, index));
}

namespace streams {
inline constexpr std::uint64_t kElementNoise = 0x454c454dULL;
inline constexpr std::uint64_t kPositionNoise = 0x504f5349ULL;
inline constexpr std::uint64_t kWeights = 0x57474854ULL;
inline constexpr std::uint64_t kSample = 0x53414d50ULL;
inline constexpr std::uint64_t kTeacher = 0x54434852ULL;
} // namespace streams

} // namespace amgenc
