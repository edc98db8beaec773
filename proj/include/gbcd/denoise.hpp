// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "gbcd/constellation.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

/// Projection onto the square that encloses the constellation: real and
/// imaginary parts are clipped independently to [-A, A].
cplx box_denoise(cplx v, const Constellation& constellation);

/// Odd-integer PAM grid {-(M-1), ..., M-1} for M = sqrt(Q).
std::vector<double> integer_pam(int order);

/// Exact per-axis posterior mean under v = beta * a + e, e ~ N(0, 1/(2 omega)):
///   sum_a a exp(-omega (v - beta a)^2) / sum_a exp(-omega (v - beta a)^2).
/// Exponents are shifted by their maximum before exponentiation.
double pme_exact(double v, double omega, double beta, std::span<const double> pam);

/// Piecewise-linear posterior mean on the integer PAM grid:
///   sum_{k=-g}^{g} clip(rho (v + 2 beta k)), g = sqrt(Q)/2 - 1, clip to [-1, 1].
/// Direct summation, used as the reference for PlmTable.
double pme_piecewise(double v, double rho, double beta, int order);

enum class PlmMode { Box, Pme, LlrDistance };

std::string to_string(PlmMode m);

/// Slope/bias lookup representation of a 1-D piecewise-linear map.
///
/// bins() = boundaries().size() + 1; bin i covers [boundary[i-1], boundary[i]).
class PlmTable {
 public:
  PlmTable() = default;
  PlmTable(PlmMode mode, std::vector<double> boundaries, std::vector<double> slopes,
           std::vector<double> biases);

  double operator()(double x) const {
    const std::size_t i = bin_index(x);
    return slopes_[i] * x + biases_[i];
  }
  cplx apply(cplx v) const { return {(*this)(v.real()), (*this)(v.imag())}; }

  std::size_t bin_index(double x) const;
  std::size_t bins() const { return slopes_.size(); }
  PlmMode mode() const { return mode_; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& biases() const { return biases_; }

  /// Largest jump across an interior boundary.
  double max_discontinuity() const;

  /// Text block:
  ///   plm <mode> <bins>
  ///   boundaries <b_1> ... <b_{bins-1}>
  ///   slopes <s_0> ... <s_{bins-1}>
  ///   biases <c_0> ... <c_{bins-1}>
  std::string to_text() const;
  static PlmTable from_text(const std::string& text);

 private:
  PlmMode mode_ = PlmMode::Box;
  std::vector<double> boundaries_;
  std::vector<double> slopes_{0.0};
  std::vector<double> biases_{0.0};
};

/// Denoiser table on the normalized constellation axis.
///   Box: clip to [-A, A].
///   Pme: scale * pme_piecewise(x / scale; rho, beta) (rho, beta ignored for Box).
PlmTable build_plm_table(PlmMode mode, double rho, double beta, const Constellation& constellation);

/// One table per in-phase axis bit (the quadrature axis uses the same
/// tables). Table b maps t = x / mu to
///   min_{p : bit b = 0} (t - p)^2 - min_{p : bit b = 1} (t - p)^2.
std::vector<PlmTable> build_llr_tables(const Constellation& constellation);

/// Channel gain and noise-plus-interference variance for the LLR stage:
///   mu_u = G_uu / (G_uu + alpha),  xi_u = Es (1 - mu_u) mu_u (floored).
struct LlrParams {
  double alpha = 0.0;
  RVector mu;
  RVector xi;
  int clamped = 0;
};

inline constexpr double kXiFloorRelative = 1e-9;

LlrParams llr_params(const RVector& gram_diagonal, double alpha, double Es);
/// Floors xi at kXiFloorRelative * Es; returns the number of clamped entries.
int floor_xi(RVector& xi, double Es);

struct SoftOutput {
  /// U x log2(Q) max-log LLRs; positive values favour bit 1.
  RMatrix llr;
  /// Unconstrained estimates handed to the LLR stage.
  CVector estimates;
  /// Denoised estimates (equal to `estimates` for linear detectors).
  CVector symbols;
  RVector mu;
  RVector xi;
  int clamped_xi = 0;
};

/// Max-log LLRs, one real-axis scan over sqrt(Q) PAM points per bit.
RMatrix axis_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                  const Constellation& constellation);
/// Same quantity by exhaustive search over all Q points (reference path).
RMatrix exhaustive_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                        const Constellation& constellation);
/// Same quantity through the LLR-distance tables.
RMatrix table_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                   const Constellation& constellation, const std::vector<PlmTable>& tables);

/// LLR stage of the GBCD detector, gains from the Neumann approximation.
SoftOutput compute_llrs(const CVector& s_hat, const CMatrix& G, double Es, double alpha,
                        const Constellation& constellation);

/// P(bit = 1) = (1 + tanh(llr / 2)) / 2.
double llr_to_prob(double llr);

/// Hard symbol decisions implied by the LLR signs.
std::vector<int> hard_symbols(const RMatrix& llr, const Constellation& constellation);

struct PmeFit {
  double omega = 0.0;
  double rms_gap = 0.0;
  double sup_gap = 0.0;
};

/// Least-squares fit of the exact-PME precision omega to the piecewise curve
/// on [-half_width, half_width] (integer PAM units); half_width <= 0 picks
/// 1.5 * (sqrt(Q) - 1) * beta.
PmeFit fit_pme_omega(double rho, double beta, int order, double half_width = 0.0);

}  // namespace gbcd
