#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace thr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream seed from a base seed and a path of
/// stream identifiers (fold index, rep index, tree index, ...). The result
/// depends only on the arguments, never on scheduling.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(base, path));
}

// Stream tags, so call sites read better than bare integers.
namespace stream {
inline constexpr std::uint64_t folds = 0xF01D;
inline constexpr std::uint64_t model = 0x30DE1;
inline constexpr std::uint64_t ties = 0x71E5;
inline constexpr std::uint64_t ci = 0xC1;
inline constexpr std::uint64_t data = 0xDA7A;
inline constexpr std::uint64_t calib = 0xCA11B;
inline constexpr std::uint64_t pool = 0x9001;
}  // namespace stream

}  // namespace thr
