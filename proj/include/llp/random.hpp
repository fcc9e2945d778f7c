#pragma once

#include <cstdint>
#include <random>

namespace llp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; good avalanche for deriving independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Named random streams. Each consumer of randomness draws from its own
/// stream so that adding draws in one place never shifts another.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kInit = 2,
  kNegatives = 3,
  kShuffle = 4,
  kDropout = 5,
  kContext = 6,
  kAnchors = 7,
  kRelationalDropout = 8,
  kBench = 9,
  kSynthetic = 10,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace llp
