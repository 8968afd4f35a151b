#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>

namespace risbc {

// Seedable random stream.
//
// Engine: 64-bit Mersenne Twister (std::mt19937_64), whose output sequence is
// fixed by the C++ standard. Every derived quantity is computed here rather
// than through the <random> distributions, whose algorithms are
// implementation-defined:
//   uniform()         53 high bits of one draw scaled by 2^-53, in [0, 1)
//   uniform_index(n)  rejection sampling on one draw modulo n, unbiased
//   complex_normal(v) Box-Muller on two uniforms, each component N(0, v/2)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  std::size_t uniform_index(std::size_t n);
  std::complex<double> complex_normal(double variance);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer applied to seed + golden-ratio * (stream + 1). Used to
// give every independent consumer (environment, exploration, init, ...) its
// own stream from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace risbc
