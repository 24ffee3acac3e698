#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace pbtdyn {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream key for (master seed, agent, generation). Randomness indexed this way
/// is independent of the order in which agents are scheduled.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t agent,
                                   std::uint64_t generation,
                                   std::uint64_t tag = 0) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ (agent + 0x5851F42D4C957F2DULL));
  k = mix64(k ^ (generation * 0x2545F4914F6CDD1DULL + 1));
  return mix64(k ^ tag);
}

/// xoshiro256++ engine. Cheap to construct, which matters because a fresh
/// stream is opened per agent per generation.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key = 0) {
    std::uint64_t x = key;
    for (auto& s : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      s = mix64(x);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(*this); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  std::normal_distribution<double> normal_{};
};

}  // namespace pbtdyn
