/*
 * Copyright 2026 The AutoDC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Reproducible random streams.
//
// Every consumer of randomness draws from a stream derived from the project's
// 64-bit master seed and a domain string such as "tsne/ii",
// "iforest/i/tree/17" or "augment/r42/3":
//
//   seed  = splitmix64_mix(master_seed ^ fnv1a64(domain))
//   state = four successive SplitMix64 outputs starting from `seed`
//   next  = xoshiro256** (Blackman & Vigna, 2018)
//
// Constants:
//   FNV-1a 64:     offset basis 0xcbf29ce484222325, prime 0x100000001b3
//   SplitMix64:    increment 0x9e3779b97f4a7c15,
//                  mix multipliers 0xbf58476d1ce4e5b9, 0x94d049bb133111eb,
//                  shifts 30, 27, 31
//   xoshiro256**:  result = rotl(s1 * 5, 7) * 9; t = s1 << 17; rotl(s3, 45)
//
// Derived values are bit-exact across platforms: uniform doubles use the top
// 53 bits, bounded integers use rejection sampling, and no std::*_distribution
// is involved.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace autodc {

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
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

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi]; returns lo when lo == hi.
  constexpr double uniform(double lo, double hi) noexcept {
    const double v = lo + (hi - lo) * uniform();
    return v > hi ? hi : v;
  }

  /// Uniform integer in [0, bound). bound must be positive.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  constexpr bool coin() noexcept { return (next() >> 63) != 0; }

  std::array<std::uint64_t, 4> state() const noexcept { return s_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::string_view domain) noexcept {
  return splitmix64_mix(master_seed ^ fnv1a64(domain));
}

inline Stream derive_stream(std::uint64_t master_seed,
                            std::string_view domain) noexcept {
  return Stream(derive_seed(master_seed, domain));
}

/// Standard normal deviates by Box-Muller. Each pair of uniforms (u1, u2)
/// yields r*cos(2*pi*u2) first and r*sin(2*pi*u2) on the following call,
/// with r = sqrt(-2 ln(1 - u1)).
class GaussianSampler {
 public:
  double operator()(Stream& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - rng.uniform();  // (0, 1]
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace autodc
