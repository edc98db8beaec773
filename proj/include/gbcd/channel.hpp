// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gbcd/constellation.hpp"
#include "gbcd/rng.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

enum class Condition { NonLoS, LoS };

Condition parse_condition(const std::string& s);
std::string to_string(Condition c);

/// Rician uniform-linear-array model used for line-of-sight channels.
struct LosOptions {
  /// Ratio of LoS to scattered power (linear). Infinity gives pure LoS.
  double k_factor = 10.0;
  double min_separation_deg = 2.0;
  /// UE angles are drawn uniformly in [-max_angle_deg, max_angle_deg].
  double max_angle_deg = 60.0;
  /// Fixed UE angles in degrees; overrides the random draw when non-empty.
  std::vector<double> angles_deg;
};

struct ChannelOptions {
  Condition condition = Condition::NonLoS;
  LosOptions los;
  /// Per-UE large-scale gain drawn uniformly in [-spread, +spread] dB before
  /// power control. Zero leaves the small-scale channel untouched.
  double power_spread_db = 0.0;
  /// Half-width of the power-control window around the mean receive power.
  double power_window_db = 3.0;
};

struct ChannelRealization {
  CMatrix H;
  Condition condition = Condition::NonLoS;
  /// Per-UE receive power relative to the mean, in dB.
  std::vector<double> rx_power_db;
};

/// Steering vector of a half-wavelength ULA with `antennas` elements.
CVector ula_steering(int antennas, double angle_rad);

ChannelRealization gen_channel(int B, int U, const ChannelOptions& options, Philox& rng);

/// Clips every column norm^2 into [mean / w, mean * w], w = 10^(window_db/10).
void apply_power_control(ChannelRealization& channel, double window_db = 3.0);

/// Receive SNR (linear) per BS antenna: Es * ||H||_F^2 / (B * N0).
double receive_snr(const CMatrix& H, double Es, double N0);
/// Noise variance that realizes `snr_db` under receive_snr().
double noise_variance_for_snr(const CMatrix& H, double Es, double snr_db);

struct TransmissionBatch {
  int T = 0;
  double N0 = 0.0;
  /// Symbol indices into the constellation, U x T, column-major (t * U + u).
  std::vector<int> symbols;
  /// Bits of each symbol, bits_per_symbol per entry of `symbols`.
  std::vector<std::uint8_t> bits;
  CMatrix S;  ///< U x T
  CMatrix N;  ///< B x T
  CMatrix Y;  ///< B x T
};

/// Builds Y = H S + N for given symbol indices and noise variance.
TransmissionBatch transmit_symbols(const CMatrix& H, const Constellation& constellation,
                                   std::vector<int> symbols, int T, double N0, Philox& rng);

struct TransmitOptions {
  /// Send all-zero symbols (noise-only receive matrix).
  bool zero_symbols = false;
};

/// Draws T i.i.d. uniform symbol vectors and transmits them at `snr_db`.
TransmissionBatch transmit(const CMatrix& H, const Constellation& constellation, int T,
                           double snr_db, Philox& rng, TransmitOptions options = {});

/// Least-squares channel estimate model: H + E, E_ij ~ CN(0, N0 / (Es U)).
ChannelRealization estimate_channel(const ChannelRealization& channel, double N0, double Es,
                                    Philox& rng);

/// Binary dump: "GBCDCMAT", uint32 rows, uint32 cols (16-byte header), then
/// column-major little-endian float64 (re, im) pairs.
void write_matrix(std::ostream& out, const CMatrix& m);
CMatrix read_matrix(std::istream& in);

}  // namespace gbcd
