// SplitMix64 generator (Steele, Lea, Flood 2014) plus portable uniform and
// normal draws. Every stream is fully specified here so that another
// implementation can reproduce it bit-for-bit:
//
//   next():    state += 0x9E3779B97F4A7C15; z = state;
//              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//              z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//              return z ^ (z >> 31);
//   uniform(): (next() >> 11) * 2^-53                      in [0, 1)
//   normal():  Box-Muller on u1 = 1 - uniform(), u2 = uniform();
//              returns sqrt(-2 ln u1) * cos(2 pi u2) and caches the sine
//              partner for the following call.
//   derive_seed(seed, a, b): mix64(mix64(seed ^ mix64(a + K)) ^ mix64(b + 2K))
//              with K = 0x9E3779B97F4A7C15 and mix64 the output finalizer.
//
// Test vector: seed 1234567 yields 6457827717110365317,
// 3203168211198807973, 9817491932198370423, 4593380528125082431,
// 16408922859458223821.

#pragma once

#include <cstdint>

namespace vgan::data {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for (seed, a, b), e.g. (master seed, trial index, variant).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(seed ^ mix64(a + kGoldenGamma)) ^ mix64(b + 2 * kGoldenGamma));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type next() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }
  result_type operator()() { return next(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n) by rejection; n must be > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t state() const { return state_; }

  bool operator==(const SplitMix64&) const = default;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vgan::data
