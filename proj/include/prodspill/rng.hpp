#pragma once

#include <array>
#include <cstdint>

namespace prodspill {

// Counter-based pseudo-random generator (Philox4x32-10). Every stream is
// identified by (seed, id_a, id_b); draws depend only on the stream identity
// and the draw index, never on scheduling or on other streams, which makes
// simulations reproducible under any worker count.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key,
                                        int rounds = 10);

// SplitMix64 finalizer used to derive stream keys from user seeds.
std::uint64_t mix64(std::uint64_t x);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t id_a, std::uint64_t id_b = 0);

  // Uniform draw on [0, 1) with 53 random bits.
  double uniform();
  // Uniform draw on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (pairs cached).
  double normal();
  // Two-point wild-bootstrap multiplier with mean 0 and second and third
  // moments equal to 1: -(sqrt(5)-1)/2 with probability (sqrt(5)+1)/(2 sqrt(5)),
  // else (sqrt(5)+1)/2.
  double mammen();

 private:
  std::array<std::uint32_t, 4> next_block();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t hi_;      // stream tag, occupies the two high counter words
  std::uint64_t block_;   // sequential block index, low counter words
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
  bool have_cached_uniform_ = false;
  double cached_uniform_ = 0.0;
};

}  // namespace prodspill
