#pragma once

#include <cstdint>
#include <random>

namespace disagg::rng {

/// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under master seed `seed`. Streams depend only on the pair, so
/// work can be scheduled in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

/// Standard normal draws. libstdc++'s normal_distribution caches a second variate, so a
/// fresh distribution is kept per stream.
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : engine_(make_engine(seed)) {}
  double operator()() { return dist_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace disagg::rng
