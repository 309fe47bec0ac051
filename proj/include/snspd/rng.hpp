#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace snspd {

/// Independent random streams consumed by one channel simulation.
enum class StreamKind : std::uint32_t { Photon = 0, Dark = 1, Jitter = 2, Crosstalk = 3 };

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives the seed of one (channel, stream) substream from the master seed.
/// Pure; distinct (channel, kind) pairs map to distinct seeds for a fixed
/// master because splitmix64 is a bijection and the xor tags differ.
inline constexpr std::uint64_t substream_seed(std::uint64_t master_seed, std::uint32_t channel,
                                              StreamKind kind) {
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(channel) << 8) | static_cast<std::uint64_t>(kind);
  return splitmix64(splitmix64(master_seed) ^ tag);
}

/// mt19937_64 with explicit variate transforms. The engine output sequence is
/// pinned by the standard and the transforms below are plain arithmetic, so a
/// stream is bit-reproducible across platforms and library versions
/// (std::*_distribution would not be).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }

  /// Exponential variate with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace snspd
