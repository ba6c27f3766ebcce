#pragma once

#include <cstdint>
#include <random>

namespace screenkit {

// SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed of substream `stream` under master seed `seed`. Independent of
// evaluation order, so replicate r draws the same numbers whether replicates
// run sequentially or on many threads.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Portable generator: std::mt19937_64 (bit-exact by the standard) plus
// bounded sampling that does not depend on the library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n), n >= 1 (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace screenkit
