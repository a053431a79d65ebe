#pragma once

#include <cmath>
#include <cstdint>

namespace edgewbc {

// Small deterministic PRNG (splitmix64). Standard-library distributions are
// not bit-stable across standard library implementations, and traces/logs
// must reproduce byte-identically from a seed, so sampling is done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one fresh pair per call, second value discarded for
  // reproducibility independent of call interleaving.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  // Log-normal parameterized by the median of the distribution.
  double lognormal_median(double median, double sigma_ln) {
    return median * std::exp(sigma_ln * gaussian());
  }

 private:
  std::uint64_t state_;
};

// Stable derivation of independent sub-streams from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r(seed ^ (0x632be59bd9b4e019ull * (stream + 1)));
  return r.next_u64();
}

}  // namespace edgewbc
