#pragma once

#include <cmath>
#include <cstdint>

namespace mfrnet {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream/index derivation used everywhere randomness branches off a single
// run seed: derive_seed(seed, stream) for per-purpose streams and
// derive_seed(seed, stream, index) for per-item streams (pairs, models,
// epochs). Purely arithmetic, so reruns with the same seed are identical.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  std::uint64_t s = seed;
  s ^= splitmix64(stream);
  std::uint64_t t = stream * 0x9E3779B97F4A7C15ULL + index;
  s ^= splitmix64(t);
  return splitmix64(s);
}

// Deterministic generator with explicit distributions. std::mt19937_64
// supplies the raw stream; uniform/normal transforms are spelled out here
// rather than taken from <random> distributions, whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so small seeds do not produce correlated leading draws.
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    return next_u64() % bound;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mfrnet
