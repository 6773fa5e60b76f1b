#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace bakery {

// Seedable, splittable random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions are implemented here rather than taken from
// <random> because the standard leaves their algorithms to the library
// vendor; everything below is bit-reproducible across toolchains.
//
// Sub-streams are derived from (seed, name) with SplitMix64 applied to
// seed ^ FNV-1a(name), so each component of a run (shuffle, sampling,
// poisson, tie-break) owns an independent sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n). n must be positive. Lemire's nearly
  // divisionless method with rejection, so the result is exactly uniform.
  std::size_t uniform_index(std::size_t n);

  // Knuth's multiplication method; exact for small means.
  unsigned poisson(double mean);

  // Standard normal via Box-Muller (one draw per call; the pair's second
  // half is discarded to keep consumption independent of call history).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bakery
