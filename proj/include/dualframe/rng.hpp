#ifndef DUALFRAME_RNG_HPP
#define DUALFRAME_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace dualframe {

// Seed-splitting step (splitmix64). Used to derive independent streams
// from a master seed so that replicate results do not depend on how work
// is scheduled.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t x = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// mt19937_64 with hand-rolled transforms. The raw generator stream is
// fixed by the standard, and avoiding std::*_distribution keeps draws
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1p-53; }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (the spare draw is discarded so the
  // consumption pattern stays one-call, two-uniforms).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace dualframe

#endif  // DUALFRAME_RNG_HPP
