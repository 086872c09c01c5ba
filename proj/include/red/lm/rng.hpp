#pragma once

/**
 * Counter-based pseudo-random streams.
 *
 * Every stream is a pure function of a 64-bit key and an internal counter,
 * so (seed, run, branch, step) can each be folded into the key and two
 * workers drawing from differently-keyed streams never interact. This is
 * what makes probe fan-out order-independent and whole runs replayable.
 */

#include <cstdint>
#include <initializer_list>

namespace red::lm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Folds an arbitrary list of 64-bit words into one well-mixed key.
inline std::uint64_t mix_key(std::initializer_list<std::uint64_t> words) {
  std::uint64_t acc = 0x8000000080001000ULL;
  for (std::uint64_t w : words) {
    acc = splitmix64(acc ^ splitmix64(w));
  }
  return acc;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream keyed(std::initializer_list<std::uint64_t> words) {
    return RngStream(mix_key(words));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64(key_ ^ splitmix64(counter_ * 0xD6E8FEB86659FD93ULL));
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Modulo bias is < 2^-40 for every n used here (n << 2^24).
    return next_u64() % n;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace red::lm
