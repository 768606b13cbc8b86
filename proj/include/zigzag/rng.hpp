#pragma once

#include <cstdint>

namespace zigzag::rnd {

// Counter-based randomness: every variate is a pure function of
// (seed, purpose, a, b, c). Trials can run on any thread layout and still
// produce bit-identical streams, which is what the reproducibility
// guarantees of the simulator rest on.

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline uint64_t splitmix64(uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Tag : uint64_t {
  channel = 1,
  transmit = 2,
  offset = 3,
  gain = 4,
  coeff = 5,
  arrival = 6,
  ack_tie = 7,
  payload = 8,
  probe = 9,
  misc = 10,
};

inline uint64_t mix(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0, uint64_t d = 0) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  h = splitmix64(h ^ d);
  return h;
}

inline uint64_t mix(uint64_t seed, Tag tag, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  return mix(seed, static_cast<uint64_t>(tag), a, b, c);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double to_u01(uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline double u01(uint64_t seed, Tag tag, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  return to_u01(mix(seed, tag, a, b, c));
}

inline bool bernoulli(double p, uint64_t seed, Tag tag, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  return u01(seed, tag, a, b, c) < p;
}

// Unbiased-enough range reduction (multiply-shift).
inline uint64_t below(uint64_t n, uint64_t h) {
  return static_cast<uint64_t>((static_cast<__uint128_t>(h) * n) >> 64);
}

// Small sequential generator for code that wants a stream (coding
// coefficients, test data). State advances splitmix-style.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0xa02c0ffeeULL)) {}

  uint64_t next() {
    state_ += kGolden;
    return splitmix64(state_);
  }
  double u01() { return to_u01(next()); }
  uint64_t below(uint64_t n) { return rnd::below(n, next()); }
  bool bernoulli(double p) { return u01() < p; }

 private:
  uint64_t state_;
};

}  // namespace zigzag::rnd
