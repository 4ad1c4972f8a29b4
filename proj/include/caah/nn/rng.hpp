#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <utility>

namespace caah::nn {

// Seed derivation: splitmix64(master ^ fnv1a(stream) ^ splitmix64(index)).
// Every random stream in the project (init, shuffle, window choice, dropout,
// synthetic data, inference window sampling) is derived this way from one
// master seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

// Portable random source. std::mt19937_64 is fully specified by the standard;
// the distributions below are implemented here because the standard library
// ones are not reproducible across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace caah::nn
