#pragma once

#include <cstdint>
#include <random>

namespace gatedclip::rng {

/// Every stochastic choice in the framework is keyed on (seed, purpose, a, b).
/// Keys are mixed with the SplitMix64 finalizer; streams that need many draws
/// seed a std::mt19937_64 from the derived key.
enum class Purpose : std::uint64_t {
  init = 1,
  synthetic_directions = 2,
  synthetic_records = 3,
  shuffle = 4,
  flip = 5,
  dropout = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0,
                                   std::uint64_t b = 0) noexcept {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ static_cast<std::uint64_t>(purpose));
  k = splitmix64(k ^ a);
  k = splitmix64(k ^ b);
  return k;
}

// Sub-key for one consumer (e.g. one dropout layer) below an already derived key.
constexpr std::uint64_t subkey(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64(key ^ splitmix64(index + 1));
}

/// Uniform in [0, 1) from the top 53 bits of a key.
constexpr double uniform_from_key(std::uint64_t key) noexcept {
  return static_cast<double>(key >> 11) * 0x1.0p-53;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t key) { return Engine(key); }

}  // namespace gatedclip::rng
