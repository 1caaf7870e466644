#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace lrmt {

// SplitMix64 generator. Every seeded operation in the toolkit draws from this
// stream so results are bit-exact across platforms and standard libraries:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// uniform_below(n) rejects draws below (2^64 - n) mod n and returns draw % n.
// uniform01() returns (draw >> 11) * 2^-53.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  std::uint64_t uniform_below(std::uint64_t n);
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }

  // Fisher-Yates from the back: for i = n-1 .. 1, swap(v[i], v[uniform_below(i+1)]).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// SplitMix64 finalizer applied to a single value.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Seed for a named sub-stream: mix64(seed ^ fnv1a64(name)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

/// Seed for an indexed sub-stream: mix64(seed ^ mix64(index + 1)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lrmt
