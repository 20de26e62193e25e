#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace uavsim {

// 64-bit FNV-1a over a label string, used to name RNG substreams.
constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x00000100000001b3ull;
  }
  return h;
}

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for the (master, label, index) substream. Each stochastic source
// (UE motion, malfunction rolls, exploration, ...) draws from its own
// stream so toggling one source leaves the others' sequences unchanged.
constexpr uint64_t derive_seed(uint64_t master, std::string_view label,
                               uint64_t index = 0) {
  const uint64_t h = splitmix64(master ^ fnv1a64(label));
  return splitmix64(h ^ (0x9e3779b97f4a7c15ull * (index + 1)));
}

// mt19937_64 with explicit output transforms. The engine's output sequence
// is pinned by the standard; the transforms below replace the
// implementation-defined std distributions, so draws are bit-identical
// across platforms for a given seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Exponential with the given mean (> 0).
  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased uniform over [0, n), n >= 1.
  uint64_t uniform_index(uint64_t n) {
    uint64_t x, r;
    do {
      x = next_u64();
      r = x % n;
    } while (x - r > UINT64_MAX - (n - 1));
    return r;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uavsim
