#pragma once

#include <cstdint>
#include <random>

namespace mahp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream purposes keep independent consumers of one master seed apart.
enum class StreamTag : std::uint64_t {
  parameters = 1,
  agent = 2,
  shuffle = 3,
  init = 4,
  plan = 5,
  evaluation = 6,
};

// Deterministic generator keyed by (seed, tag, index); streams for different
// keys do not depend on the order in which they are created.
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  // 53-bit mantissa in [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mahp
