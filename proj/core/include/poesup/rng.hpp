#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace poesup {

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Everything layered on top (uniform doubles, normals, bounded
/// integers, shuffles) is implemented here instead of through the
/// <random> distributions, whose algorithms are implementation-defined.
/// Together this gives the same stream on every platform for a given seed.
///
///   uniform()  = (next_u64() >> 11) * 2^-53            in [0, 1)
///   normal()   = Box-Muller on two uniforms, cosine branch only
///   below(n)   = rejection sampling on next_u64()
///   split(tag) = Rng(splitmix64(seed ^ splitmix64(tag)))
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream identified by `tag`; does not advance this stream.
  Rng split(std::uint64_t tag) const;
  Rng split(std::string_view tag) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a, used to turn string tags into stream ids.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace poesup
