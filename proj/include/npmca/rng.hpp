#pragma once

#include <cstdint>

namespace npmca {

/// splitmix64 step; used for seeding and for deriving child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` of a master seed. Pure function.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xd1b54a32d192ed03ULL * (index + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// xoshiro256** seeded through splitmix64. All draws are defined in terms of
/// integer arithmetic and IEEE doubles, so a seed yields the same stream on
/// every platform (unlike the std:: distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive, unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller (no cached second value).
  double normal();

 private:
  std::uint64_t s_[4];
};

}  // namespace npmca
