#include "sand/rng.hpp"

namespace sand::rng {

namespace {

std::uint64_t mix_step(std::uint64_t h, std::uint64_t v) {
  // One splitmix-style absorption round per value.
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  SplitMix64 s(h);
  return s.next_u64();
}

}  // namespace

std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
  return mix_step(seed, a);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_step(mix_step(seed, a), b);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                     std::uint64_t c) {
  return mix_step(mix_step(mix_step(seed, a), b), c);
}

}  // namespace sand::rng
