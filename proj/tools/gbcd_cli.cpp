// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: simulate, ablate, train, hwmodel.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gbcd/hwmodel.hpp"
#include "gbcd/simulation.hpp"
#include "gbcd/unfolding.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingParams = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool fixed_point = false;
  std::string trace;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gbcd::InvalidArgument("cannot read config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw gbcd::InvalidArgument(path + ": " + e.what());
  }
}

// Writes to --out when given, stdout otherwise.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw gbcd::InvalidArgument("cannot write " + path);
  fn(out);
}

gbcd::ExperimentConfig experiment(const CommonFlags& f) {
  nlohmann::json j = read_json(f.config);
  if (f.seed) j["seed"] = *f.seed;
  if (f.threads > 0) j["threads"] = f.threads;
  if (f.fixed_point) j["fixed_point"] = true;
  return gbcd::experiment_from_json(j);
}

void print_notes(const std::vector<std::string>& notes) {
  for (const std::string& n : notes) std::cerr << "note: " << n << '\n';
}

void run_simulate(const CommonFlags& f) {
  const gbcd::ExperimentConfig cfg = experiment(f);
  if (!f.trace.empty()) emit(f.trace, [&](std::ostream& os) { gbcd::write_first_trace(cfg, os); });
  std::vector<std::string> notes;
  const auto rows = gbcd::run_sweep(cfg, &notes);
  print_notes(notes);
  emit(f.out, [&](std::ostream& os) { gbcd::write_sweep_csv(os, rows); });
}

void run_ablate(const CommonFlags& f) {
  const gbcd::ExperimentConfig cfg = experiment(f);
  std::vector<std::string> notes;
  const auto rows = gbcd::run_ablation(cfg, &notes);
  print_notes(notes);
  emit(f.out, [&](std::ostream& os) { gbcd::write_ablation_csv(os, rows); });
}

// {"scenario": {...}, "snr_db": [...], "seed": 1, "threads": 1, "training": {...}}
void run_train(const CommonFlags& f) {
  const nlohmann::json j = read_json(f.config);
  gbcd::reject_unknown_keys(j, {"scenario", "snr_db", "seed", "threads", "training"}, "train");
  if (!j.contains("seed") && !f.seed) throw gbcd::InvalidArgument("train: 'seed' is required");
  if (f.out.empty()) throw gbcd::InvalidArgument("train: --out is required");
  gbcd::Scenario scenario = j.contains("scenario") ? gbcd::scenario_from_json(j.at("scenario"))
                                                   : gbcd::Scenario{};
  gbcd::TrainConfig tc = gbcd::train_config_from_json(j.value("training", nlohmann::json::object()));
  std::vector<double> snrs;
  try {
    const auto& s = j.at("snr_db");
    snrs = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
    tc.seed = f.seed ? *f.seed : j.at("seed").get<std::uint64_t>();
    tc.threads = f.threads > 0 ? f.threads : j.value("threads", 1);
  } catch (const nlohmann::json::exception& e) {
    throw gbcd::InvalidArgument(std::string("train: ") + e.what());
  }
  gbcd::ParamStore store;
  if (std::ifstream(f.out)) store = gbcd::ParamStore::load(f.out);
  for (double snr : snrs) {
    if (snr < gbcd::kMinTrainedSnrDb || snr > gbcd::kMaxTrainedSnrDb)
      throw gbcd::InvalidArgument("train: SNR must lie in [0, 25] dB");
    gbcd::TrainConfig per = tc;
    per.seed = gbcd::derive_seed(tc.seed, {static_cast<std::uint64_t>(std::llround(snr * 1000.0))});
    gbcd::TrainHistory h;
    const gbcd::TrainedParams p = gbcd::train(scenario, snr, per, &h);
    std::cerr << "trained " << snr << " dB: epochs=" << p.epochs << " best_epoch=" << h.best_epoch
              << " val_loss=" << p.val_loss << '\n';
    store.put(p);
  }
  store.save(f.out);
}

// {"B":128, "U":16, "K":3, "order":256, "f_clk_hz":887e6, "T":[...],
//  "power_samples": [[T, watts], ...]}
void run_hwmodel(const CommonFlags& f) {
  nlohmann::json j = f.config.empty() ? nlohmann::json::object() : read_json(f.config);
  gbcd::reject_unknown_keys(j, {"B", "U", "K", "order", "f_clk_hz", "T", "power_samples"},
                            "hwmodel");
  int B, U, K, Q;
  double f_clk;
  std::vector<double> Ts;
  std::vector<std::pair<double, double>> samples;
  try {
    B = j.value("B", 128);
    U = j.value("U", 16);
    K = j.value("K", 3);
    Q = j.value("order", 256);
    f_clk = j.value("f_clk_hz", 887e6);
    Ts = j.value("T", std::vector<double>{1, 2, 5, 9, 10, 11, 12, 13, 14, 16, 20, 32, 54, 100});
    if (j.contains("power_samples"))
      samples = j.at("power_samples").get<std::vector<std::pair<double, double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw gbcd::InvalidArgument(std::string("hwmodel: ") + e.what());
  }
  if (U < 2 || U % 2 != 0 || B < U || K < 1)
    throw gbcd::InvalidArgument("hwmodel: need even U >= 2, B >= U and K >= 1");
  const gbcd::TimingModel timing = gbcd::TimingModel::for_dims(B, U);
  double p_tilde = gbcd::kDefaultPTilde, p_equ = gbcd::kDefaultPEqu;
  if (!samples.empty()) {
    const gbcd::PowerFit fit = gbcd::fit_power(samples, timing);
    p_tilde = fit.p_tilde;
    p_equ = fit.p_equ;
    std::cerr << "power fit: p_tilde=" << p_tilde << " W p_equ=" << p_equ
              << " W r2=" << fit.r_squared << '\n';
  }
  const gbcd::ComplexityReport reports[] = {gbcd::complexity_gbcd(B, U, K),
                                            gbcd::complexity_lmmse(B, U),
                                            gbcd::complexity_ocd(B, U, K)};
  emit(f.out, [&](std::ostream& os) {
    os << "algorithm,B,U,K,T,pre_mults,eq_mults,total,theta_bps,eta,p_watts_fit\n";
    os << std::setprecision(10);
    for (double T : Ts) {
      const auto t = static_cast<std::uint64_t>(T);
      for (const gbcd::ComplexityReport& r : reports) {
        os << r.algorithm << ',' << B << ',' << U << ',';
        if (r.algorithm != "lmmse") os << K;
        os << ',' << t << ',' << r.preprocessing << ',' << r.per_transmission << ',' << r.total(t)
           << ',';
        if (r.algorithm == "gbcd" && T >= 1)
          os << gbcd::throughput(T, Q, U, f_clk, timing) << ',' << gbcd::utilization(T, timing)
             << ',' << gbcd::power_model(T, p_tilde, p_equ, timing);
        else
          os << ",,";
        os << '\n';
      }
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GBCD soft-output MIMO detector: simulation, training and hardware models"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&flags](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", flags.config, "JSON configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", flags.out, "Output path (stdout when omitted)");
    sub->add_option("--seed", flags.seed, "Override the configured seed");
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::NonNegativeNumber);
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Coded BLER / uncoded SER sweep");
  add_common(simulate, true);
  simulate->add_flag("--fixed-point", flags.fixed_point, "Quantized GBCD datapath");
  simulate->add_option("--trace", flags.trace, "Write the GBCD iteration trace CSV here");
  CLI::App* ablate = app.add_subcommand("ablate", "Incremental-technique study");
  add_common(ablate, true);
  ablate->add_flag("--fixed-point", flags.fixed_point, "Quantized GBCD datapath");
  CLI::App* train = app.add_subcommand("train", "Deep-unfolding training");
  add_common(train, true);
  CLI::App* hw = app.add_subcommand("hwmodel", "Complexity, throughput and power tables");
  add_common(hw, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) run_simulate(flags);
    else if (*ablate) run_ablate(flags);
    else if (*train) run_train(flags);
    else if (*hw) run_hwmodel(flags);
  } catch (const gbcd::MissingParams& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingParams;
  } catch (const gbcd::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
