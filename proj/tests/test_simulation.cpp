// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "gbcd/simulation.hpp"

using namespace gbcd;

namespace {

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.scenario.B = 8;
  c.scenario.U = 4;
  c.scenario.order = 4;
  c.n_data = 24;
  c.snr_db = {2.0, 6.0};
  c.detectors = {"gbcd-box", "lmmse", "ocd"};
  c.max_blocks = 40;
  c.min_block_errors = 100000;
  c.chunk = 4;
  c.seed = 77;
  return c;
}

std::string sweep_csv(const ExperimentConfig& c) {
  std::ostringstream out;
  write_sweep_csv(out, run_sweep(c));
  return out.str();
}

}  // namespace

TEST_CASE("experiment config parsing") {
  const nlohmann::json ok = {{"snr_db", {0, 5}}, {"seed", 3}, {"trials", 12}};
  const ExperimentConfig c = experiment_from_json(ok);
  CHECK(c.max_blocks == 12);
  CHECK(c.snr_db == std::vector<double>{0, 5});
  CHECK_THROWS_AS(experiment_from_json({{"snr_db", 1}}), InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json({{"snr_db", 1}, {"seed", 1}, {"bogus", 2}}),
                  InvalidArgument);
  CHECK_THROWS_AS(experiment_from_json({{"snr_db", 1}, {"seed", 1}, {"csi", "blind"}}),
                  InvalidArgument);
  CHECK_THROWS_AS(
      experiment_from_json({{"snr_db", 1}, {"seed", 1}, {"scenario", {{"B", 2}, {"U", 4}}}}),
      InvalidArgument);
  ExperimentConfig bad = small_experiment();
  bad.detectors = {"zf"};
  CHECK_THROWS_AS(run_sweep(bad), InvalidArgument);
}

TEST_CASE("error-free at very high snr") {
  ExperimentConfig c = small_experiment();
  c.scenario.B = 16;
  c.scenario.order = 16;
  c.snr_db = {60.0};
  for (const SweepRow& r : run_sweep(c)) {
    CHECK(r.block_errors == 0);
    CHECK(r.ser == 0.0);
  }
}

TEST_CASE("sweeps are reproducible and thread-invariant") {
  ExperimentConfig c = small_experiment();
  const std::string a = sweep_csv(c);
  CHECK(a == sweep_csv(c));
  c.threads = 3;
  CHECK(a == sweep_csv(c));
  CHECK(a.rfind("snr_db,detector,bler,ser,trials,block_errors\n", 0) == 0);
  c.seed = 78;
  CHECK(a != sweep_csv(c));
}

TEST_CASE("early stop once enough block errors are seen") {
  ExperimentConfig c = small_experiment();
  c.snr_db = {-2.0};
  c.max_blocks = 400;
  c.min_block_errors = 8;
  for (const SweepRow& r : run_sweep(c)) {
    CHECK(r.trials < 400);
    if (r.detector == "lmmse") CHECK(r.block_errors >= 8);
  }
}

TEST_CASE("lmmse error rate falls with snr") {
  ExperimentConfig c = small_experiment();
  c.detectors = {"lmmse"};
  c.snr_db = {0.0, 4.0, 8.0};
  c.max_blocks = 200;
  const auto rows = run_sweep(c);
  CHECK(rows[0].bler >= rows[1].bler);
  CHECK(rows[1].bler >= rows[2].bler);
  CHECK(rows[0].ser > rows[2].ser);
}

TEST_CASE("missing trained parameters") {
  ExperimentConfig c = small_experiment();
  c.detectors = {"gbcd-pme"};
  c.params_path = "does-not-exist.json";
  CHECK_THROWS_AS(run_sweep(c), MissingParams);
  c.allow_box_fallback = true;
  std::vector<std::string> notes;
  CHECK_NOTHROW(run_sweep(c, &notes));
  CHECK(!notes.empty());
}

TEST_CASE("ablation shares data across variants") {
  ExperimentConfig c = small_experiment();
  c.snr_db = {4.0};
  c.allow_box_fallback = true;
  c.params_path.clear();
  c.empirical_samples = 40;
  c.empirical_rho = {0.5, 1.0};
  c.empirical_beta = {1.0};
  std::vector<std::string> notes;
  const auto rows = run_ablation(c, &notes);
  REQUIRE(rows.size() == 1u);
  const AblationRow& a = rows[0];
  REQUIRE(a.block_errors.size() == ablation_variants().size());

  // Same trials as a plain sweep: coordinate descent and sorted GBCD agree.
  const PointResult p = simulate_point(c, resolve_detectors(c, 4.0, nullptr), 0);
  CHECK(p.data_hash == a.data_hash);
  CHECK(p.counts[2].block_errors == a.block_errors[0]);  // ocd == cd_box
  CHECK(p.counts[0].block_errors == a.block_errors[3]);  // gbcd-box == gbcd_box_sort
  // Untrained PME falls back to the box detector.
  CHECK(a.block_errors[5] == a.block_errors[3]);

  // With scalar blocks, GBCD variants collapse onto the coordinate-descent ones.
  c.block_size = 1;
  const auto one = run_ablation(c, &notes);
  CHECK(one[0].block_errors[1] == one[0].block_errors[3]);
  CHECK(one[0].block_errors[0] == one[0].block_errors[2]);

  std::ostringstream out;
  write_ablation_csv(out, rows);
  CHECK(out.str().rfind("snr_db,trials,cd_box_bler,cd_box_ser,cd_box_block_errors,", 0) == 0);
}
