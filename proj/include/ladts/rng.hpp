#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ladts {

// Mixes a seed with stream tags so independent components (environment,
// per-node trainers, latent stores, ...) each get their own reproducible
// stream from one experiment seed.
inline uint64_t mix_seed(uint64_t seed) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard); the distributions are implemented
// here because the standard-library ones are implementation-defined and
// would break byte-identical reruns across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  // [0, 1)
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // integers in [lo, hi], inclusive
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<int64_t>(hi) - lo + 1;
    auto v = static_cast<int64_t>(uniform01() * static_cast<double>(span));
    if (v >= span) v = span - 1;
    return static_cast<int>(lo + v);
  }

  // standard normal via Box-Muller (one value per call)
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  uint64_t raw() { return engine_(); }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

}  // namespace ladts
