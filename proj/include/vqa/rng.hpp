// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace vqa {

/// xoshiro256** seeded through splitmix64. The algorithm is frozen: golden
/// files under tests/golden pin its output, so every seeded run in the
/// project is reproducible bit-for-bit across platforms. Distribution
/// helpers are implemented here rather than with <random> distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent child stream, derived deterministically from this one.
  Rng split();

  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace vqa
