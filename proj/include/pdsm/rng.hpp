// Copyright 2026 The PDSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace pdsm {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used for seeding and for
/// deriving independent child streams.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// xoshiro256** 1.0 (Blackman, Vigna).
///
/// Seeding: the four state words are the first four outputs of SplitMix64
/// started at the seed. Child streams: `split(tag)` returns a generator seeded
/// with mix(seed, tag), where mix runs one SplitMix64 step on
/// seed ^ (tag * 0xD1B54A32D192ED03). Splitting is a pure function of the
/// parent seed, never of the parent's consumed state, so per-sample streams
/// do not depend on processing order.
///
/// Derived distributions are defined bit-exactly so other implementations
/// can reproduce them:
///   uniform()        = (next() >> 11) * 2^-53, in [0, 1)
///   below(n)         = rejection sampling: draw r until r >= (2^64 - n) mod n,
///                      return r mod n
///   normal()         = Box-Muller, cos branch only:
///                      sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  static constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t st = seed ^ (tag * 0xD1B54A32D192ED03ULL);
    return splitmix64(st);
  }
  Rng split(std::uint64_t tag) const noexcept { return Rng(mix(seed_, tag)); }
  Rng split(std::string_view tag) const noexcept { return split(fnv1a(tag)); }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform integer in [lo, hi] inclusive.
  long long range(long long lo, long long hi) noexcept {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// First `k` entries of a Fisher-Yates shuffle of 0..n-1 (swap i with
  /// i + below(n - i) for i = 0, 1, ...). k is clamped to n.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(v.size() - i));
      std::swap(v[i], v[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace pdsm
