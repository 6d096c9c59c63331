#pragma once

// Deterministic random streams. Simulation results must be reproducible
// bit-for-bit from a single seed, so everything is built on splitmix64
// instead of the implementation-defined std:: distributions.

#include <cmath>
#include <cstdint>

namespace a5opt {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream id from a base seed and a tag (cell id,
// user id, subsystem constant, ...).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 0x632be59bd9b4e019ULL));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  int next_int(int lo, int hi) {
    const double u = next_double();
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(u * span);
    return v > hi ? hi : v;
  }

  // Standard normal via Box-Muller; the second deviate is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1], keeps log() finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace a5opt
