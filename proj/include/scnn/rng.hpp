#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace scnn {

// SplitMix64 finalizer. Used both as the generator step and for seed mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic PRNG with a platform-independent sequence. All randomness in
// the library flows through this type so that a run is a pure function of its
// seeds; std::mt19937 + distributions would tie results to the standard
// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return mix64(state_ += 0x9E3779B97F4A7C15ull); }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform in [0, n). Lemire's multiply-shift; slight bias is irrelevant at
  // the sizes used here and the sequence stays platform-independent.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates. Deterministic given the current state.
  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// Named sub-stream purposes so independent uses of one run seed never share a
// sequence.
enum class Stream : std::uint64_t {
  param_init = 1,
  epoch_shuffle = 2,
  zoom = 3,
  synthetic = 4,
  split = 5,
};

// Derives the seed of an independent stream from (seed, purpose, index).
inline std::uint64_t derive_seed(std::uint64_t seed, Stream purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t z = mix64(seed ^ 0x6A09E667F3BCC909ull);
  z = mix64(z ^ (static_cast<std::uint64_t>(purpose) * 0x9E3779B97F4A7C15ull));
  return mix64(z ^ (index * 0xD1B54A32D192ED03ull));
}

}  // namespace scnn
