#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace raman {

inline constexpr std::string_view kRngName = "xoshiro256++/splitmix64/boost-ziggurat-normal";

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds any number of integer keys into a single 64-bit stream key.
constexpr std::uint64_t stream_key(std::uint64_t master) { return master; }

template <typename... Rest>
constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t next, Rest... rest) {
  std::uint64_t s = master ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t mixed = splitmix64(s) ^ (next + 0x3c6ef372fe94f82bULL);
  s = mixed;
  return stream_key(splitmix64(s), static_cast<std::uint64_t>(rest)...);
}

// xoshiro256++ bit stream; normals come from Boost's ziggurat, which is a
// fixed algorithm (no implementation-defined std:: distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) { seed(key); }

  void seed(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& w : s_) w = splitmix64(sm);
    normal_.reset();
  }

  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
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

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  double exponential(double rate) { return -std::log(uniform_open0()) / rate; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  boost::random::normal_distribution<double> normal_;
};

}  // namespace raman
