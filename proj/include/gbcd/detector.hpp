// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gbcd/constellation.hpp"
#include "gbcd/denoise.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

/// G = H^H H. Only the upper triangle is accumulated; the lower triangle is
/// filled by conjugation.
CMatrix gram(const CMatrix& H, MulCounter* counter = nullptr);

/// y_mf = H^H y.
CVector matched_filter(const CMatrix& H, const CVector& y, MulCounter* counter = nullptr);

/// Reciprocal of the per-UE post-equalization SINR,
///   lambda_u / G_uu^2 + N0 / (Es G_uu),  lambda_u = sum_{i != u} |G_ui|^2,
/// evaluated as g (lambda_u g + N0/Es) with g = 1 / G_uu.
/// Throws NumericalError when a diagonal entry is not positive.
RVector reciprocal_sinr(const CMatrix& G, double N0, double Es, MulCounter* counter = nullptr,
                        const std::function<double(double)>& reciprocal = {});

/// Stable ascending argsort (ties broken by UE index).
std::vector<int> sort_ues(const RVector& inv_sinr);
/// Bitonic sorting network on (value, index) keys; size must be a power of two.
std::vector<int> bitonic_argsort(const RVector& values);

struct BlockInverses {
  std::vector<CMatrix> inverses;
  /// Blocks whose determinant fell below the singularity threshold and were
  /// regularized with eps * I, eps = 1e-6 * trace / L.
  std::vector<int> regularized;
};

/// Inverse of each diagonal block G[A_m, A_m]. L = 2 uses the closed-form
/// adjugate; other sizes use a dense LU solve.
BlockInverses block_inverses(const CMatrix& G, const std::vector<std::vector<int>>& blocks,
                             MulCounter* counter = nullptr,
                             const std::function<double(double)>& reciprocal = {});

struct PreprocessOptions {
  int block_size = 2;
  bool sort = true;
};

/// Everything that depends only on the channel; immutable after construction
/// and shared by all transmissions of a coherence block.
struct Preprocessed {
  CMatrix G;
  RVector inv_sinr;
  std::vector<int> order;
  std::vector<std::vector<int>> blocks;
  std::vector<CMatrix> block_inverse;
  std::vector<int> regularized_blocks;
  double N0 = 0.0;
  double Es = 1.0;
  int block_size = 2;

  int users() const { return static_cast<int>(G.rows()); }
};

/// Preprocessing from an already computed Gram matrix.
Preprocessed preprocess_gram(CMatrix G, double N0, double Es, const PreprocessOptions& options = {},
                             MulCounter* counter = nullptr,
                             const std::function<double(double)>& reciprocal = {});
Preprocessed preprocess(const CMatrix& H, double N0, double Es,
                        const PreprocessOptions& options = {}, MulCounter* counter = nullptr);

/// Per-iteration element-wise denoiser tables (a single table is reused for
/// every iteration).
struct DenoiserSchedule {
  std::vector<PlmTable> tables;
  const PlmTable& at(int iteration) const {
    return tables.size() == 1 ? tables.front() : tables.at(static_cast<std::size_t>(iteration));
  }
};

DenoiserSchedule box_schedule(const Constellation& constellation);
DenoiserSchedule pme_schedule(const std::vector<double>& rho, const std::vector<double>& beta,
                              const Constellation& constellation);

struct EqualizerState {
  CVector z;
  CVector r;
  CVector v_last;
  int k = 0;
};

struct TraceRow {
  int iteration = 0;
  int block = 0;
  double residual_norm = 0.0;
  CVector z;
};

struct EqualizeOptions {
  /// Applied to every new denoised entry (fixed-point mode).
  std::function<cplx(cplx)> quantize_z;
  /// Applied to every residual entry after each update (fixed-point mode).
  std::function<cplx(cplx)> quantize_r;
  std::vector<TraceRow>* trace = nullptr;
};

/// K outer iterations over the sorted blocks with the residual recursion
///   v_A = K_m r_A + z_A,  z_A <- denoise(v_A),  r <- r - G[:, A] (z_A_new - z_A_old).
/// Throws InvalidArgument when K < 1.
EqualizerState gbcd_equalize(const Preprocessed& prep, const CVector& y_mf, int K,
                             const DenoiserSchedule& denoiser, const EqualizeOptions& options = {},
                             MulCounter* counter = nullptr);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

struct GbcdConfig {
  int iterations = 3;
  PreprocessOptions preprocess;
  DenoiserSchedule denoiser;
  /// LLR normalization; defaults to N0 / Es when unset.
  std::optional<double> alpha;
};

/// Full detector: preprocessing, then matched filter, equalization and LLRs
/// for every column of Y.
std::vector<SoftOutput> gbcd_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                    const GbcdConfig& config, const Constellation& constellation);

}  // namespace gbcd
