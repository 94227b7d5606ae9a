#pragma once

#include <cstdint>

namespace sand::rng {

// SplitMix64 (Steele et al.). Chosen over <random> engines because both the
// engine and our double conversion are fully specified, so seeded runs are
// byte-identical across platforms and standard-library versions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). Multiply-shift; deterministic, no rejection loop.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }
};

// Seed derivation: hashes the parts through SplitMix64 steps so nearby inputs
// land far apart. Used to give every (trajectory, step, draw) its own stream;
// draws therefore do not depend on scheduling order or worker count.
std::uint64_t derive(std::uint64_t seed, std::uint64_t a);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                     std::uint64_t c);

}  // namespace sand::rng
