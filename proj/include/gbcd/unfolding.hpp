// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbcd/constellation.hpp"
#include "gbcd/detector.hpp"
#include "gbcd/scenario.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

/// Trainable parameters of a K-iteration GBCD-PME detector: one (rho, beta)
/// pair per iteration shared by all blocks, plus the LLR normalization alpha.
struct UnfoldParams {
  std::vector<double> rho;
  std::vector<double> beta;
  double alpha = 0.0;

  int iterations() const { return static_cast<int>(rho.size()); }
  std::size_t size() const { return 2 * rho.size() + 1; }
  /// Flat layout (rho_1..rho_K, beta_1..beta_K, alpha).
  std::vector<double> flatten() const;
  static UnfoldParams unflatten(const std::vector<double>& flat);
  void validate() const;

  /// rho = beta = 1 reproduces the BOX denoiser exactly.
  static UnfoldParams box_equivalent(int K, double alpha);
};

/// One supervised example: channel-dependent preprocessing, the matched
/// filter output of one receive vector and the transmitted bits (u-major).
struct TrainSample {
  Preprocessed prep;
  CVector y_mf;
  std::vector<int> symbols;
  std::vector<std::uint8_t> bits;
};

TrainSample make_sample(const CMatrix& H, const CVector& y, std::vector<int> symbols,
                        double N0, const Constellation& constellation,
                        const PreprocessOptions& options);

/// `count` samples, each with its own channel drawn from the scenario model
/// and one transmission at snr_db. Sample i uses channel seed
/// derive_seed(seed, {i}).
std::vector<TrainSample> make_samples(const Scenario& scenario, double snr_db,
                                      const PreprocessOptions& options, int count,
                                      std::uint64_t seed, int threads = 1);

/// Distance to the nearest non-differentiable point seen in a forward pass.
struct KinkMargins {
  /// min over clip terms of ||pre-clip| - 1|.
  double clip = 0.0;
  /// min distance (integer PAM units) of s_hat / mu to an argmin switch.
  double argmin = 0.0;
  /// min distance of |LLR| to the probability clamp.
  double clamp = 0.0;
  /// True when a NPI variance hit its floor.
  bool xi_floored = false;

  bool smooth(double delta) const {
    return clip > delta && argmin > delta && clamp > delta && !xi_floored;
  }
};

struct ForwardResult {
  /// Sum of BCE over all UEs and bits of this transmission.
  double loss = 0.0;
  RMatrix llr;
  CVector s_hat;
  KinkMargins margins;
  /// Gradient in the flat natural-parameter layout; empty without backward.
  std::vector<double> grad;
};

inline constexpr double kProbClamp = 1e-12;

/// BCE of one bit for detector LLR (positive favours 1) with the
/// probability clamped to [kProbClamp, 1 - kProbClamp].
double bce(double llr, int bit);

ForwardResult unfold_forward(const UnfoldParams& params, const TrainSample& sample,
                             const Constellation& constellation, bool with_grad);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Batch mean of the per-transmission loss (and its gradient). Per-sample
/// results are reduced in index order, independent of `threads`.
double forward_loss(const UnfoldParams& params, const std::vector<TrainSample>& batch,
                    const Constellation& constellation, int threads = 1);
LossGrad loss_and_grad(const UnfoldParams& params, const std::vector<TrainSample>& batch,
                       const Constellation& constellation, int threads = 1,
                       const std::vector<std::size_t>* subset = nullptr);

struct TrainConfig {
  int iterations = 3;
  int train_samples = 2000;
  int val_samples = 500;
  int batch_size = 100;
  int max_epochs = 200;
  double learning_rate = 1e-2;
  double lr_decay = 0.5;
  int plateau_epochs = 5;
  int patience = 10;
  std::uint64_t seed = 1;
  int threads = 1;
  PreprocessOptions preprocess;
  /// Initial alpha; defaults to the nominal N0/Es at the training SNR.
  std::optional<double> alpha_init;
};

TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainedParams {
  int order = 16;
  Condition condition = Condition::NonLoS;
  double snr_db = 0.0;
  int B = 0;
  int U = 0;
  UnfoldParams params;
  int epochs = 0;
  double val_loss = 0.0;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> val_loss;
  std::vector<double> learning_rate;
  int best_epoch = 0;
};

/// Adam on (log rho, log beta, softplus^-1 alpha) over shuffled mini-batches
/// with validation-based early stopping. Returns the best parameters seen.
/// Throws NumericalError when the loss becomes non-finite.
UnfoldParams train_params(const std::vector<TrainSample>& train,
                          const std::vector<TrainSample>& val, const Constellation& constellation,
                          const UnfoldParams& init, const TrainConfig& config,
                          TrainHistory* history = nullptr);

/// Generates disjoint training and validation sets for the scenario and
/// trains at snr_db.
TrainedParams train(const Scenario& scenario, double snr_db, const TrainConfig& config,
                    TrainHistory* history = nullptr);

/// Nominal N0/Es of the channel model (unit-variance entries) at snr_db.
double nominal_alpha(int U, double snr_db);

/// Grid search for a single (rho, beta) pair used by every iteration.
UnfoldParams grid_search_pme(const std::vector<TrainSample>& val, const Constellation& constellation,
                             int K, double alpha, const std::vector<double>& rho_grid,
                             const std::vector<double>& beta_grid, int threads = 1);

struct ParamLookup {
  enum class Kind { Trained, Box, Missing };
  Kind kind = Kind::Missing;
  TrainedParams record;
  /// Set when the returned record was trained at a different SNR bucket
  /// than requested (above the trained range).
  bool fallback = false;
  std::string note;
};

inline constexpr double kMinTrainedSnrDb = 0.0;
inline constexpr double kMaxTrainedSnrDb = 25.0;

/// Trained parameters keyed by (order, condition, K, snr_db).
class ParamStore {
 public:
  void put(const TrainedParams& p);
  const std::vector<TrainedParams>& records() const { return records_; }

  /// Below 0 dB: BOX directive. Above 25 dB: the record trained closest to
  /// 25 dB with `fallback` set. Otherwise the record with the nearest SNR.
  ParamLookup lookup(int order, Condition condition, int K, double snr_db) const;

  nlohmann::json to_json() const;
  static ParamStore from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::vector<TrainedParams> records_;
};

}  // namespace gbcd
