// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_RNG_H_
#define CRA_RNG_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace cra {

// Counter-based SplitMix64. The i-th output (i = 0, 1, ...) is
//   mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
// with Stafford's "Mix13" finalizer. Streams are defined entirely by
// 64-bit integer arithmetic and are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  // Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

// Sub-seed for a (purpose, id) pair under a global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::string_view id = {});
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t index);

}  // namespace cra

#endif  // CRA_RNG_H_
