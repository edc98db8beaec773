// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gbcd/constellation.hpp"
#include "gbcd/denoise.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

/// Lower-triangular factor with L L^H = A and a real positive diagonal.
struct CholeskyFactor {
  CMatrix L;
};

/// Throws NumericalError when A is not positive definite.
CholeskyFactor cholesky(const CMatrix& A, MulCounter* counter = nullptr);
/// Solves L w = b.
CVector forward_substitute(const CholeskyFactor& f, const CVector& b,
                           MulCounter* counter = nullptr);
/// Solves L^H x = w.
CVector backward_substitute(const CholeskyFactor& f, const CVector& w,
                            MulCounter* counter = nullptr);

struct LmmsePreprocessed {
  CMatrix G;
  CholeskyFactor chol;
  /// Exact per-UE gain [A^-1 G]_uu and NPI variance Es (1 - mu) mu.
  RVector mu;
  RVector xi;
  int clamped_xi = 0;
  double N0 = 0.0;
  double Es = 1.0;
};

/// Gram matrix plus Cholesky factor of A = G + (N0/Es) I. Only these two
/// steps are counted; the exact gains are computed outside the counter.
LmmsePreprocessed lmmse_preprocess(const CMatrix& H, double N0, double Es,
                                   MulCounter* counter = nullptr);
/// s_hat = A^-1 y_mf by forward then backward substitution.
CVector lmmse_equalize(const LmmsePreprocessed& prep, const CVector& y_mf,
                       MulCounter* counter = nullptr);
std::vector<SoftOutput> lmmse_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                     const Constellation& constellation);

struct OcdPreprocessed {
  RVector norm2;
  RVector inv_norm2;
  double N0 = 0.0;
  double Es = 1.0;
};

/// Column norms and their reciprocals. Throws NumericalError on a zero column.
OcdPreprocessed ocd_preprocess(const CMatrix& H, double N0, double Es,
                               MulCounter* counter = nullptr);

struct OcdState {
  CVector z;
  CVector v_last;
  /// Receive-domain residual y - H z.
  CVector r;
};

struct OcdOptions {
  /// Receives ||y - H z||^2 after every coordinate update when set.
  std::vector<double>* objective = nullptr;
};

/// K sweeps of coordinate descent in natural UE order with the BOX
/// denoiser and a B-dimensional residual.
OcdState ocd_equalize(const CMatrix& H, const OcdPreprocessed& prep, const CVector& y, int K,
                      const Constellation& constellation, const OcdOptions& options = {},
                      MulCounter* counter = nullptr);
std::vector<SoftOutput> ocd_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                   int K, const Constellation& constellation);

}  // namespace gbcd
