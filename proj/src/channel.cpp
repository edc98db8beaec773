// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace gbcd {

static_assert(std::endian::native == std::endian::little,
              "matrix dump assumes a little-endian host");

Condition parse_condition(const std::string& s) {
  if (s == "nonlos" || s == "NonLoS" || s == "rayleigh") return Condition::NonLoS;
  if (s == "los" || s == "LoS") return Condition::LoS;
  throw InvalidArgument("unknown channel condition '" + s + "'");
}

std::string to_string(Condition c) { return c == Condition::LoS ? "los" : "nonlos"; }

CVector ula_steering(int antennas, double angle_rad) {
  CVector a(antennas);
  const double phase = std::numbers::pi * std::sin(angle_rad);
  for (int b = 0; b < antennas; ++b) a[b] = std::polar(1.0, phase * b);
  return a;
}

namespace {

std::vector<double> draw_angles(int U, const LosOptions& los, Philox& rng) {
  if (!los.angles_deg.empty()) {
    if (static_cast<int>(los.angles_deg.size()) != U)
      throw InvalidArgument("LoS angle list does not match U");
    return los.angles_deg;
  }
  std::vector<double> angles;
  int attempts = 0;
  while (static_cast<int>(angles.size()) < U) {
    if (++attempts > 100000)
      throw InvalidArgument("cannot place UEs with the requested angular separation");
    const double a = (2.0 * rng.uniform() - 1.0) * los.max_angle_deg;
    const bool ok = std::all_of(angles.begin(), angles.end(), [&](double o) {
      return std::abs(o - a) >= los.min_separation_deg;
    });
    if (ok) angles.push_back(a);
  }
  return angles;
}

}  // namespace

ChannelRealization gen_channel(int B, int U, const ChannelOptions& options, Philox& rng) {
  if (B < 1 || U < 1 || B < U)
    throw InvalidArgument("gen_channel: need B >= U >= 1");

  ChannelRealization ch;
  ch.condition = options.condition;
  ch.H.resize(B, U);

  if (options.condition == Condition::NonLoS) {
    for (int u = 0; u < U; ++u)
      for (int b = 0; b < B; ++b) ch.H(b, u) = rng.complex_normal(1.0);
  } else {
    const double k = options.los.k_factor;
    const bool pure = std::isinf(k);
    const double los_gain = pure ? 1.0 : std::sqrt(k / (k + 1.0));
    const double nlos_gain = pure ? 0.0 : std::sqrt(1.0 / (k + 1.0));
    const std::vector<double> angles = draw_angles(U, options.los, rng);
    for (int u = 0; u < U; ++u) {
      const cplx phase = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
      const CVector a = ula_steering(B, angles[u] * std::numbers::pi / 180.0);
      for (int b = 0; b < B; ++b) {
        cplx h = los_gain * phase * a[b];
        if (!pure) h += nlos_gain * rng.complex_normal(1.0);
        ch.H(b, u) = h;
      }
    }
  }

  if (options.power_spread_db > 0.0) {
    for (int u = 0; u < U; ++u) {
      const double db = (2.0 * rng.uniform() - 1.0) * options.power_spread_db;
      ch.H.col(u) *= std::pow(10.0, db / 20.0);
    }
  }
  apply_power_control(ch, options.power_window_db);
  return ch;
}

void apply_power_control(ChannelRealization& ch, double window_db) {
  const Eigen::Index U = ch.H.cols();
  RVector power(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    power[u] = ch.H.col(u).squaredNorm();
    if (!(power[u] > 0.0) || !std::isfinite(power[u]))
      throw NumericalError("channel column is zero or non-finite");
  }
  const double mean = power.mean();
  const double w = std::pow(10.0, window_db / 10.0);
  const double lo = mean / w;
  const double hi = mean * w;
  for (Eigen::Index u = 0; u < U; ++u) {
    const double target = std::clamp(power[u], lo, hi);
    if (target != power[u]) {
      ch.H.col(u) *= std::sqrt(target / power[u]);
      power[u] = target;
    }
  }
  const double new_mean = power.mean();
  ch.rx_power_db.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) ch.rx_power_db[u] = 10.0 * std::log10(power[u] / new_mean);
}

double receive_snr(const CMatrix& H, double Es, double N0) {
  return Es * H.squaredNorm() / (static_cast<double>(H.rows()) * N0);
}

double noise_variance_for_snr(const CMatrix& H, double Es, double snr_db) {
  if (!std::isfinite(snr_db)) throw InvalidArgument("SNR must be finite");
  return Es * H.squaredNorm() / (static_cast<double>(H.rows()) * std::pow(10.0, snr_db / 10.0));
}

TransmissionBatch transmit_symbols(const CMatrix& H, const Constellation& constellation,
                                   std::vector<int> symbols, int T, double N0, Philox& rng) {
  const Eigen::Index B = H.rows();
  const Eigen::Index U = H.cols();
  if (T < 1) throw InvalidArgument("transmit: T must be >= 1");
  if (static_cast<Eigen::Index>(symbols.size()) != U * T)
    throw InvalidArgument("transmit: symbol count does not match U * T");
  if (N0 < 0.0) throw InvalidArgument("transmit: negative noise variance");

  TransmissionBatch batch;
  batch.T = T;
  batch.N0 = N0;
  batch.S.resize(U, T);
  batch.bits.resize(symbols.size() * constellation.bits_per_symbol);
  for (int t = 0; t < T; ++t) {
    for (Eigen::Index u = 0; u < U; ++u) {
      const std::size_t idx = static_cast<std::size_t>(t * U + u);
      const int s = symbols[idx];
      batch.S(u, t) = constellation.points.at(s);
      constellation.demap(
          s, std::span(batch.bits).subspan(idx * constellation.bits_per_symbol,
                                           constellation.bits_per_symbol));
    }
  }
  batch.symbols = std::move(symbols);
  batch.N.resize(B, T);
  for (int t = 0; t < T; ++t)
    for (Eigen::Index b = 0; b < B; ++b) batch.N(b, t) = N0 > 0.0 ? rng.complex_normal(N0) : cplx{};
  batch.Y = H * batch.S + batch.N;
  return batch;
}

TransmissionBatch transmit(const CMatrix& H, const Constellation& constellation, int T,
                           double snr_db, Philox& rng, TransmitOptions options) {
  const double Es = 1.0;
  const double N0 = noise_variance_for_snr(H, Es, snr_db);
  std::vector<int> symbols(static_cast<std::size_t>(H.cols()) * std::max(T, 0));
  for (int& s : symbols) s = static_cast<int>(rng.below(constellation.order));
  TransmissionBatch batch = transmit_symbols(H, constellation, std::move(symbols), T, N0, rng);
  if (options.zero_symbols) {
    batch.S.setZero();
    batch.Y = H * batch.S + batch.N;
  }
  return batch;
}

ChannelRealization estimate_channel(const ChannelRealization& channel, double N0, double Es,
                                    Philox& rng) {
  if (N0 < 0.0) throw InvalidArgument("estimate_channel: negative noise variance");
  ChannelRealization est = channel;
  if (N0 == 0.0) return est;
  const double var = N0 / (Es * static_cast<double>(channel.H.cols()));
  for (Eigen::Index u = 0; u < est.H.cols(); ++u)
    for (Eigen::Index b = 0; b < est.H.rows(); ++b) est.H(b, u) += rng.complex_normal(var);
  return est;
}

namespace {
constexpr char kMagic[8] = {'G', 'B', 'C', 'D', 'C', 'M', 'A', 'T'};
}

void write_matrix(std::ostream& out, const CMatrix& m) {
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double pair[2] = {m(r, c).real(), m(r, c).imag()};
      out.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  }
}

CMatrix read_matrix(std::istream& in) {
  char magic[8];
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw InvalidArgument("read_matrix: bad header");
  CMatrix m(rows, cols);
  for (std::uint32_t c = 0; c < cols; ++c) {
    for (std::uint32_t r = 0; r < rows; ++r) {
      double pair[2];
      in.read(reinterpret_cast<char*>(pair), sizeof pair);
      m(r, c) = {pair[0], pair[1]};
    }
  }
  if (!in) throw InvalidArgument("read_matrix: truncated payload");
  return m;
}

}  // namespace gbcd
