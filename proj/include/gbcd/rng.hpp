// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "gbcd/types.hpp"

namespace gbcd {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key, and the 128-bit counter is split into a
/// 64-bit stream id (high words) and a 64-bit block index (low words). Two
/// generators with the same (seed, stream) produce identical sequences on
/// every platform; distinct streams are statistically independent, which is
/// how per-trial generators are derived.
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in (0, 1].
  double uniform_open0();
  /// Standard normal via Box-Muller.
  double normal();
  /// Circularly-symmetric complex Gaussian with E|x|^2 = variance.
  cplx complex_normal(double variance);
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Derives a child seed from a parent seed and a path of integers (splitmix64
/// chaining). Used for per-SNR, per-trial and per-purpose seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

}  // namespace gbcd
