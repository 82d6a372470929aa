#pragma once

#include <cstdint>
#include <random>

namespace tactile {

using Rng = std::mt19937_64;

// splitmix64 finalizer. Used to spread a base seed plus stream labels into
// well-separated engine seeds so that every consumer of randomness draws from
// its own stream and stays reproducible regardless of evaluation order.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

inline uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index) {
  return mix64(derive_seed(base, stream) ^ mix64(index));
}

// Stream labels. An episode derives its seed from the experiment seed via
// (seed, kEpisode, episode_index); everything inside the episode hangs off
// the episode seed with the labels below.
namespace streams {
inline constexpr uint64_t kEpisode = 1;
inline constexpr uint64_t kInit = 2;
inline constexpr uint64_t kObserve = 3;
inline constexpr uint64_t kResample = 4;
inline constexpr uint64_t kPolicy = 5;
inline constexpr uint64_t kBootstrap = 6;
inline constexpr uint64_t kTrials = 7;
}  // namespace streams

inline double uniform01(Rng& g) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(g);
}

inline double normal(Rng& g, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> d(0.0, sigma);
  return d(g);
}

}  // namespace tactile
