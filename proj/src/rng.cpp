#include "prodspill/rng.hpp"

#include <cmath>

namespace prodspill {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in [0,1) from two 32-bit words.
inline double to_unit_double(std::uint32_t hi, std::uint32_t lo) {
  std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key,
                                        int rounds) {
  for (int r = 0; r < rounds; ++r) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, counter[0], hi0, lo0);
    mulhilo(kPhiloxM1, counter[2], hi1, lo1);
    counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return counter;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t id_a, std::uint64_t id_b)
    : block_(0) {
  std::uint64_t k = mix64(seed);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  hi_ = mix64(mix64(id_a) ^ (id_b + 0x632BE59BD9B4E019ull));
}

std::array<std::uint32_t, 4> RngStream::next_block() {
  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(hi_), static_cast<std::uint32_t>(hi_ >> 32)};
  ++block_;
  return philox4x32(ctr, key_);
}

double RngStream::uniform() {
  if (have_cached_uniform_) {
    have_cached_uniform_ = false;
    return cached_uniform_;
  }
  auto w = next_block();
  cached_uniform_ = to_unit_double(w[2], w[3]);
  have_cached_uniform_ = true;
  return to_unit_double(w[0], w[1]);
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on a fresh block; u1 is shifted into (0,1] so log() is finite.
  auto w = next_block();
  double u1 = to_unit_double(w[0], w[1]);
  double u2 = to_unit_double(w[2], w[3]);
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

double RngStream::mammen() {
  static const double sqrt5 = std::sqrt(5.0);
  static const double p_low = (sqrt5 + 1.0) / (2.0 * sqrt5);
  static const double v_low = -(sqrt5 - 1.0) / 2.0;
  static const double v_high = (sqrt5 + 1.0) / 2.0;
  return uniform() < p_low ? v_low : v_high;
}

}  // namespace prodspill
