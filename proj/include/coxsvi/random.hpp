#pragma once

// Seeding and subsampling utilities. Every stochastic routine in the
// library takes an explicit Rng so that (config, seed) fully determines
// its output. Parallel work units derive independent sub-seeds from
// (seed, stream index) via split_seed, so thread count never changes
// results.

#include "coxsvi/types.hpp"

#include <random>
#include <vector>

namespace coxsvi {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates consecutive seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic sub-seed for stream `stream` of master seed `seed`.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ull));
}

// Uniform random subset of size k from {0, ..., n-1} without replacement,
// returned sorted ascending. Floyd's algorithm: O(k) memory regardless of n.
std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng);

}  // namespace coxsvi
