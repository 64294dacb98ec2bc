#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

// Seeding discipline: one config seed, named substreams, one independent
// stream per sample path. Determinism does not depend on thread count.

namespace omfrac {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// FNV-1a; used to derive named substreams from the single run seed.
inline std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  return mix_seed(seed, h);
}

// Standard normal stream: mt19937_64 + Box-Muller (no cached second value,
// so consumption order is reproducible).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    // uniforms in (0,1]; log(u1) stays finite
    const double u1 =
        (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace omfrac
