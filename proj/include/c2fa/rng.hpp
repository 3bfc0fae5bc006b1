#pragma once

#include <cstdint>
#include <random>

#include "c2fa/types.hpp"

namespace c2fa {

// splitmix64 finalizer; used to derive independent streams from (seed, tag).
inline std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Folds a binary mask into a hash so oracles can attach deterministic
// per-mask noise (same mask -> same output).
inline std::uint64_t hash_mask(std::uint64_t seed, const Vector& mask) {
  std::uint64_t h = splitmix64(seed ^ 0x6d61736bULL);
  std::uint64_t word = 0;
  int used = 0;
  for (Index i = 0; i < mask.size(); ++i) {
    word = (word << 1) | (mask[i] != 0.0 ? 1ULL : 0ULL);
    if (++used == 64) {
      h = mix_seed(h, word);
      word = 0;
      used = 0;
    }
  }
  if (used > 0) h = mix_seed(h, word);
  return mix_seed(h, static_cast<std::uint64_t>(mask.size()));
}

// One standard normal draw from a hashed seed.
inline double gaussian_from(std::uint64_t h) {
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal;
  return normal(rng);
}

}  // namespace c2fa
