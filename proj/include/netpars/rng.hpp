#pragma once
// Deterministic random streams.  A splitmix64 core with hash-derived
// substreams, so independent sampling concerns (topology draw, event
// placement, observation noise) never share a sequence and toggling one
// of them cannot shift the others.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace netpars {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + golden)) {}

  // Independent stream derived from (seed, a, b).
  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = mix(seed + golden);
    s = mix(s ^ (a + golden));
    s = mix(s ^ (b + 2 * golden));
    Rng r(0);
    r.state_ = s;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += golden;
    return mix(state_);
  }

  // Uniform in [0, 1), 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}, unbiased (rejection).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::next_int: empty range");
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller (one deviate per call, two uniforms).
  double next_normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double next_normal(double mean, double stddev) { return mean + stddev * next_normal(); }

 private:
  static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace netpars
