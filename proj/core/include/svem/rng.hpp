#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace svem {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from a master seed and a path of
// indices. Results depend only on the arguments, never on call order.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Stream tags keep substreams of different purposes apart.
namespace stream {
inline constexpr std::uint64_t kPoints = 0x100;
inline constexpr std::uint64_t kObserved = 0x200;
inline constexpr std::uint64_t kPermutation = 0x300;
inline constexpr std::uint64_t kPermutationFit = 0x400;
inline constexpr std::uint64_t kBootstrap = 0x500;
inline constexpr std::uint64_t kTrial = 0x600;
inline constexpr std::uint64_t kMethod = 0x700;
inline constexpr std::uint64_t kResponse = 0x800;
inline constexpr std::uint64_t kSurface = 0x900;
inline constexpr std::uint64_t kDesign = 0xa00;
}  // namespace stream

}  // namespace svem
