#ifndef CHURNSTORE_RANDOM_HPP
#define CHURNSTORE_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace churnstore {

using Rng = std::mt19937_64;

// Stream domains keep the adversary and protocol randomness disjoint.
enum class Stream : std::uint64_t {
  Adversary = 0xA5A5'0001,
  Topology = 0xA5A5'0002,
  Walk = 0x5A5A'0001,
  Protocol = 0x5A5A'0002,
  Workload = 0x5A5A'0003,
  Payload = 0x5A5A'0004,
};

/// Folds a list of words into one 64-bit seed (splitmix64 finaliser per word).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x9E37'79B9'7F4A'7C15ull;
  for (std::uint64_t w : words) {
    std::uint64_t z = h ^ (w + 0x9E37'79B9'7F4A'7C15ull + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xBF58'476D'1CE4'E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D0'49BB'1331'11EBull;
    h = z ^ (z >> 31);
  }
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(mix_seed({seed, static_cast<std::uint64_t>(stream), a, b}));
}

/// Uniform index in [0, bound) from 32 random bits (multiply-shift).
inline std::uint32_t bounded(std::uint32_t bits, std::uint32_t bound) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(bits) * bound) >> 32);
}

}  // namespace churnstore

#endif  // CHURNSTORE_RANDOM_HPP
