#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sinegan {

// Deterministic random source. All draws go through explicit methods so
// that streams are reproducible bit-for-bit within one build, independent
// of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(mix(seed)) {}

  // Independent substream: hash-combine the parent seed with a stream id.
  // Streams derived with distinct ids are statistically independent, so
  // parallel consumers can draw without coordinating.
  static Rng derive(uint64_t seed, uint64_t stream) {
    return Rng(mix(seed) ^ (mix(stream + 0x9e3779b97f4a7c15ull) >> 1));
  }

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Marsaglia polar method with a cached spare.
  double normal(double mean = 0.0, double std = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + std * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + std * u * m;
  }

  void fill_normal(std::vector<double>& out, double mean, double std) {
    for (auto& x : out) x = normal(mean, std);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, fixed order of draws.
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  // splitmix64 finalizer; avoids correlated mt19937_64 states for nearby seeds.
  static uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sinegan
