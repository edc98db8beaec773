// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gbcd/constellation.hpp"
#include "gbcd/denoise.hpp"
#include "gbcd/detector.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

/// Real-valued multiplication counts; divisions count as multiplications.
struct ComplexityReport {
  std::string algorithm;
  int B = 0;
  int U = 0;
  int K = 0;
  int L = 0;
  std::uint64_t preprocessing = 0;
  std::uint64_t per_transmission = 0;

  std::uint64_t total(std::uint64_t T) const { return preprocessing + T * per_transmission; }
};

/// Closed forms for L = 2:
///   preprocessing     2 B U^2 + U (2U + 2) + 3U
///   per transmission  4 B U + 8 K U + 4 K U^2
ComplexityReport complexity_gbcd(int B, int U, int K);

/// Counts taken from an instrumented run of preprocessing and one
/// equalization (LLR computation excluded).
ComplexityReport measure_gbcd(int B, int U, int K, int L = 2, std::uint64_t seed = 1);
/// Preprocessing 2 B U^2 + (2U^3 - 2U)/3; per-transmission count measured
/// (matched filter plus forward and backward substitution).
ComplexityReport complexity_lmmse(int B, int U, std::uint64_t seed = 1);
ComplexityReport measure_lmmse(int B, int U, std::uint64_t seed = 1);
/// Both counts measured on the instrumented OCD implementation.
ComplexityReport complexity_ocd(int B, int U, int K, std::uint64_t seed = 1);

/// Cycle budget of the preprocessing engine: cycles_per_vector per receive
/// vector and idle_cycles of preprocessing per coherence block.
struct TimingModel {
  double cycles_per_vector = 16.0;
  double idle_cycles = 144.0;

  /// cycles_per_vector = U, idle_cycles = B + U.
  static TimingModel for_dims(int B, int U);
};

/// Theta(T) = T / (c T + i) * log2(Q) * U * f_clk.
double throughput(double T, int Q, int U, double f_clk_hz, const TimingModel& timing = {});
double asymptotic_throughput(int Q, int U, double f_clk_hz, const TimingModel& timing = {});
/// eta(T) = T / (T + i / c).
double utilization(double T, const TimingModel& timing = {});

struct PowerFit {
  double p_tilde = 0.0;
  double p_equ = 0.0;
  double r_squared = 0.0;
};

inline constexpr double kDefaultPTilde = 0.420;
inline constexpr double kDefaultPEqu = 0.367;

/// P(T) = P_tilde + eta(T) P_equ.
double power_model(double T, double p_tilde, double p_equ, const TimingModel& timing = {});
/// Linear least squares on (T, watts) samples. Throws InvalidArgument when
/// fewer than two distinct T values are given.
PowerFit fit_power(const std::vector<std::pair<double, double>>& samples,
                   const TimingModel& timing = {});

/// Signed two's-complement format with `bits` total and `frac` fraction bits.
struct FxpFormat {
  int bits = 16;
  int frac = 8;

  double lsb() const;
  double max_value() const;
  double min_value() const;
};

/// Round half to even, saturating at the format range.
double quantize(double x, const FxpFormat& f);
cplx quantize(cplx x, const FxpFormat& f);
CMatrix quantize(const CMatrix& m, const FxpFormat& f);

/// Per-signal formats (per real component).
struct FxpConfig {
  FxpFormat h{12, 9};
  FxpFormat y{12, 6};
  FxpFormat g{15, 6};
  FxpFormat y_mf{18, 8};
  FxpFormat z{11, 9};
  FxpFormat llr{18, 4};
};

/// Checked-in formats from profiling at 128 x 16, 256-QAM (see profile_fxp).
FxpConfig frozen_fxp_config();

struct FxpProfileSpec {
  int B = 128;
  int U = 16;
  int order = 256;
  int K = 3;
  double snr_min_db = 0.0;
  double snr_max_db = 25.0;
  int realizations = 10000;
  double percentile = 99.99;
  std::uint64_t seed = 2026;
};

struct FxpProfile {
  FxpConfig config;
  /// Percentile magnitudes for h, y, g, y_mf, z, llr.
  std::vector<double> magnitudes;
};

/// Records per-signal real and imaginary magnitudes of floating-point
/// GBCD-BOX runs and allocates enough integer bits to cover the percentile.
FxpProfile profile_fxp(const FxpProfileSpec& spec);

/// Integer bits needed so that the signed range covers `magnitude`.
int integer_bits_for(double magnitude);

/// Piecewise-linear reciprocal on the mantissa in [1, 2).
class ReciprocalLut {
 public:
  explicit ReciprocalLut(int segments = 64);
  double operator()(double x) const;
  int segments() const { return segments_; }

 private:
  int segments_;
  std::vector<double> slope_;
  std::vector<double> bias_;
};

/// GBCD with H, y, G, y_mf, z, the residual and the LLRs quantized and all
/// reciprocals taken from a ReciprocalLut.
std::vector<SoftOutput> gbcd_detect_fixed(const CMatrix& H, const CMatrix& Y, double N0,
                                          double Es, const GbcdConfig& config,
                                          const Constellation& constellation,
                                          const FxpConfig& fxp = frozen_fxp_config());

}  // namespace gbcd
