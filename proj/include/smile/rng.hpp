#pragma once

#include <cstdint>

#include "smile/stats.hpp"

namespace smile {

//! Seed for the deterministic generator. Identical seeds give bit-identical
//! draws on every platform (pure integer mixing plus rational-polynomial
//! quantile evaluation, no libm dispatch in the hot path).
struct Seed {
  std::uint64_t value = 0;
};

//! Counter-based SplitMix64 stream. Substreams for replicates are derived by
//! remixing the base seed with the stream index, so replicate r of seed s is
//! the same no matter how work is scheduled across threads.
class Rng {
 public:
  explicit Rng(Seed seed) : state_(seed.value) {}
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  //! Independent substream i (used as one stream per replicate).
  Rng stream(std::uint64_t i) const {
    return Rng(mix(state_ ^ mix(i + 0x9e3779b97f4a7c15ull)));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  //! Uniform draw in the open interval (0, 1), 53-bit resolution.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal(double mean = 0.0, double sd = 1.0) {
    return mean + sd * normal_quantile(uniform01());
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
    return z ^ (z >> 33);
  }

  std::uint64_t state_;
};

}  // namespace smile
