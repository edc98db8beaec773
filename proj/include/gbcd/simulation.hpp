// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbcd/detector.hpp"
#include "gbcd/scenario.hpp"
#include "gbcd/unfolding.hpp"

namespace gbcd {

/// Raised when a PME detector needs trained parameters that are not
/// available and BOX fallback is not permitted.
class MissingParams : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Csi { Perfect, LeastSquares };

struct ExperimentConfig {
  Scenario scenario;
  std::vector<double> snr_db;
  /// Any of "gbcd-box", "gbcd-pme", "lmmse", "ocd".
  std::vector<std::string> detectors{"gbcd-box", "lmmse"};
  int iterations = 3;
  int block_size = 2;
  bool sort = true;
  /// Data subcarriers per codeword.
  int n_data = 120;
  /// Subcarriers sharing one channel realization; 0 means all of n_data.
  int coherence_group = 0;
  /// Upper bound on simulated codeword blocks per SNR point.
  long max_blocks = 2000;
  /// Early stop once every detector has at least this many block errors.
  long min_block_errors = 200;
  /// OFDM symbols simulated between early-stop checks.
  int chunk = 8;
  std::uint64_t seed = 0;
  bool fixed_point = false;
  Csi csi = Csi::Perfect;
  std::string params_path;
  bool allow_box_fallback = false;
  int threads = 1;
  /// Ablation only.
  int empirical_samples = 500;
  std::vector<double> empirical_rho{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
  std::vector<double> empirical_beta{0.85, 0.9, 0.95, 1.0, 1.05, 1.1};

  void validate() const;
};

/// Parses the JSON experiment file; "seed" is mandatory. Throws
/// InvalidArgument on malformed or unknown fields.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::string& path);

enum class DetectorKind { Gbcd, Lmmse, Ocd };

struct DetectorSpec {
  std::string name;
  DetectorKind kind = DetectorKind::Gbcd;
  GbcdConfig gbcd;
  /// OCD sweeps.
  int iterations = 3;
  bool fixed_point = false;
};

struct DetectorCounts {
  long block_errors = 0;
  long symbol_errors = 0;
  long symbols = 0;
};

struct PointResult {
  double snr_db = 0.0;
  long blocks = 0;
  std::vector<DetectorCounts> counts;
  /// FNV-1a over every channel, symbol and noise sample consumed.
  std::uint64_t data_hash = 0;
};

/// Runs every detector on identical Monte-Carlo data at one SNR point.
/// Deterministic for a given config regardless of config.threads.
PointResult simulate_point(const ExperimentConfig& config, const std::vector<DetectorSpec>& detectors,
                           std::size_t snr_index);

struct SweepRow {
  double snr_db = 0.0;
  std::string detector;
  double bler = 0.0;
  double ser = 0.0;
  long trials = 0;
  long block_errors = 0;
};

/// Resolves detector names at one SNR point. `notes` receives fallback
/// messages. Throws MissingParams when PME parameters cannot be resolved.
std::vector<DetectorSpec> resolve_detectors(const ExperimentConfig& config, double snr_db,
                                            const ParamStore* store,
                                            std::vector<std::string>* notes = nullptr);

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                std::vector<std::string>* notes = nullptr);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v{"cd_box",        "cd_box_sort",        "gbcd_box",
                                          "gbcd_box_sort", "gbcd_pme_empirical", "gbcd_pme_trained"};
  return v;
}

struct AblationRow {
  double snr_db = 0.0;
  long trials = 0;
  std::vector<double> bler;
  std::vector<double> ser;
  std::vector<long> block_errors;
  std::uint64_t data_hash = 0;
  /// Grid-searched pair used by the empirical PME variant.
  double empirical_rho = 0.0;
  double empirical_beta = 0.0;
};

std::vector<AblationRow> run_ablation(const ExperimentConfig& config,
                                      std::vector<std::string>* notes = nullptr);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

/// Writes the per-block GBCD trace of the first transmission of the first
/// SNR point.
void write_first_trace(const ExperimentConfig& config, std::ostream& out);

}  // namespace gbcd
