#pragma once

#include <cstdint>

namespace heightlab {

// Counter-based generator: output i of stream (seed, stream) is a pure
// function of (seed, stream, i), so chains can own independent streams and
// trajectories replay exactly from (seed, stream) on any platform.
// The mixer is the splitmix64 finalizer applied to a Weyl sequence.
class CounterRng {
 public:
  CounterRng() : CounterRng(0, 0) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_key(seed, stream)), counter_(0) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + (counter_++) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}; n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection to remove modulo bias; loop is ~always a single draw here.
    std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace heightlab
