// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gbcd/types.hpp"

namespace gbcd {

/// Gray-mapped square QAM alphabet with unit average symbol energy.
///
/// Point index p = i_re * pam_size + i_im, where i_re / i_im index the PAM
/// amplitudes in ascending order. Bit b of a symbol (b = 0 is the first bit
/// on the wire) belongs to the in-phase axis for b < bits_per_axis and to the
/// quadrature axis otherwise; within an axis, bits are the Gray label of the
/// PAM index, most significant bit first.
struct Constellation {
  int order = 0;
  int bits_per_symbol = 0;
  int bits_per_axis = 0;
  int pam_size = 0;
  /// Per-axis normalizer: normalized amplitude = scale * odd integer.
  double scale = 0.0;
  /// Normalized PAM amplitudes, ascending.
  std::vector<double> pam;
  /// Gray label of each PAM index (bits_per_axis bits).
  std::vector<std::uint32_t> pam_labels;
  std::vector<cplx> points;
  /// Full bit label of each point, bit 0 in the most significant position.
  std::vector<std::uint32_t> labels;
  /// subset[bit][value] lists the point indices whose bit `bit` equals value.
  std::vector<std::array<std::vector<int>, 2>> bit_subsets;

  double max_amplitude() const { return pam.back(); }
  double energy() const;

  int bit(int point, int b) const {
    return static_cast<int>((labels[point] >> (bits_per_symbol - 1 - b)) & 1u);
  }
  /// Bit b of the Gray label of PAM index i (b in [0, bits_per_axis)).
  int pam_bit(int pam_index, int b) const {
    return static_cast<int>((pam_labels[pam_index] >> (bits_per_axis - 1 - b)) & 1u);
  }
  /// Maps bits_per_symbol bits to a point index.
  int map(std::span<const std::uint8_t> bits) const;
  /// Writes the bits of `point` into out[0..bits_per_symbol).
  void demap(int point, std::span<std::uint8_t> out) const;
  int nearest_pam(double x) const;
  int nearest(cplx x) const;
};

/// Builds the Q-QAM alphabet; Q must be one of 4, 16, 64, 256.
Constellation make_constellation(int order);

}  // namespace gbcd
