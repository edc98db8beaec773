// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/constellation.hpp"

#include <cmath>
#include <string>

namespace gbcd {

Constellation make_constellation(int order) {
  if (order != 4 && order != 16 && order != 64 && order != 256)
    throw InvalidArgument("unsupported constellation order " + std::to_string(order));

  Constellation c;
  c.order = order;
  c.bits_per_symbol = static_cast<int>(std::lround(std::log2(order)));
  c.bits_per_axis = c.bits_per_symbol / 2;
  c.pam_size = 1 << c.bits_per_axis;
  // Es = 2 * mean(a^2) over odd integers a = +-1..+-(M-1) = 2 (M^2 - 1) / 3.
  const double m = c.pam_size;
  c.scale = 1.0 / std::sqrt(2.0 * (m * m - 1.0) / 3.0);

  c.pam.resize(c.pam_size);
  c.pam_labels.resize(c.pam_size);
  for (int i = 0; i < c.pam_size; ++i) {
    c.pam[i] = c.scale * (2 * i - (c.pam_size - 1));
    c.pam_labels[i] = static_cast<std::uint32_t>(i ^ (i >> 1));
  }

  c.points.resize(order);
  c.labels.resize(order);
  for (int ir = 0; ir < c.pam_size; ++ir) {
    for (int ii = 0; ii < c.pam_size; ++ii) {
      const int p = ir * c.pam_size + ii;
      c.points[p] = {c.pam[ir], c.pam[ii]};
      c.labels[p] = (c.pam_labels[ir] << c.bits_per_axis) | c.pam_labels[ii];
    }
  }

  c.bit_subsets.resize(c.bits_per_symbol);
  for (int b = 0; b < c.bits_per_symbol; ++b)
    for (int p = 0; p < order; ++p) c.bit_subsets[b][c.bit(p, b)].push_back(p);
  return c;
}

double Constellation::energy() const {
  double e = 0.0;
  for (const cplx& p : points) e += std::norm(p);
  return e / static_cast<double>(points.size());
}

int Constellation::map(std::span<const std::uint8_t> bits) const {
  if (static_cast<int>(bits.size()) != bits_per_symbol)
    throw InvalidArgument("Constellation::map: wrong number of bits");
  std::uint32_t label = 0;
  for (std::uint8_t b : bits) label = (label << 1) | (b & 1u);
  const std::uint32_t axis_mask = (1u << bits_per_axis) - 1u;
  // Gray decode each axis label back to its PAM index.
  auto gray_to_index = [](std::uint32_t g) {
    std::uint32_t i = g;
    for (std::uint32_t s = g >> 1; s != 0; s >>= 1) i ^= s;
    return static_cast<int>(i);
  };
  const int ir = gray_to_index(label >> bits_per_axis);
  const int ii = gray_to_index(label & axis_mask);
  return ir * pam_size + ii;
}

void Constellation::demap(int point, std::span<std::uint8_t> out) const {
  for (int b = 0; b < bits_per_symbol; ++b) out[b] = static_cast<std::uint8_t>(bit(point, b));
}

int Constellation::nearest_pam(double x) const {
  const double idx = std::round((x / scale + (pam_size - 1)) / 2.0);
  if (idx <= 0.0) return 0;
  if (idx >= pam_size - 1) return pam_size - 1;
  return static_cast<int>(idx);
}

int Constellation::nearest(cplx x) const {
  return nearest_pam(x.real()) * pam_size + nearest_pam(x.imag());
}

}  // namespace gbcd
