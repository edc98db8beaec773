// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/simulation.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gbcd/baselines.hpp"
#include "gbcd/channel.hpp"
#include "gbcd/fec.hpp"
#include "gbcd/hwmodel.hpp"
#include "gbcd/parallel.hpp"
#include "gbcd/rng.hpp"

namespace gbcd {

namespace {

const char* const kKnownDetectors[] = {"gbcd-box", "gbcd-pme", "lmmse", "ocd"};

bool known_detector(const std::string& d) {
  return std::any_of(std::begin(kKnownDetectors), std::end(kKnownDetectors),
                     [&](const char* k) { return d == k; });
}

}  // namespace

void ExperimentConfig::validate() const {
  scenario.validate();
  if (snr_db.empty()) throw InvalidArgument("experiment: snr_db must list at least one point");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw InvalidArgument("experiment: SNR values must be finite");
  if (detectors.empty()) throw InvalidArgument("experiment: detectors must not be empty");
  for (const std::string& d : detectors)
    if (!known_detector(d)) throw InvalidArgument("experiment: unknown detector '" + d + "'");
  if (iterations < 1) throw InvalidArgument("experiment: iterations must be at least 1");
  if (block_size < 1 || scenario.U % block_size != 0)
    throw InvalidArgument("experiment: block_size must divide U");
  if (n_data < 1 || coherence_group < 0)
    throw InvalidArgument("experiment: n_data must be positive and coherence_group non-negative");
  if (max_blocks < 1) throw InvalidArgument("experiment: trials must be at least 1");
  if (min_block_errors < 1 || chunk < 1)
    throw InvalidArgument("experiment: min_block_errors and chunk must be positive");
  if (threads < 1) throw InvalidArgument("experiment: threads must be at least 1");
  make_code_config(scenario.rate,
                   static_cast<std::size_t>(n_data) * make_constellation(scenario.order).bits_per_symbol,
                   0);
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"scenario", "snr_db", "detectors", "iterations", "block_size", "sort",
                       "n_data", "coherence_group", "trials", "min_block_errors", "chunk", "seed",
                       "fixed_point", "csi", "params", "allow_box_fallback", "threads",
                       "empirical_samples", "empirical_rho", "empirical_beta"},
                      "experiment");
  if (!j.contains("seed")) throw InvalidArgument("experiment: 'seed' is required");
  ExperimentConfig c;
  try {
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    const auto& snr = j.at("snr_db");
    c.snr_db = snr.is_array() ? snr.get<std::vector<double>>()
                              : std::vector<double>{snr.get<double>()};
    if (j.contains("detectors")) c.detectors = j.at("detectors").get<std::vector<std::string>>();
    c.iterations = j.value("iterations", c.iterations);
    c.block_size = j.value("block_size", c.block_size);
    c.sort = j.value("sort", c.sort);
    c.n_data = j.value("n_data", c.n_data);
    c.coherence_group = j.value("coherence_group", c.coherence_group);
    c.max_blocks = j.value("trials", c.max_blocks);
    c.min_block_errors = j.value("min_block_errors", c.min_block_errors);
    c.chunk = j.value("chunk", c.chunk);
    c.seed = j.at("seed").get<std::uint64_t>();
    c.fixed_point = j.value("fixed_point", c.fixed_point);
    const std::string csi = j.value("csi", std::string("perfect"));
    if (csi == "perfect") c.csi = Csi::Perfect;
    else if (csi == "ls") c.csi = Csi::LeastSquares;
    else throw InvalidArgument("experiment: csi must be 'perfect' or 'ls'");
    c.params_path = j.value("params", c.params_path);
    c.allow_box_fallback = j.value("allow_box_fallback", c.allow_box_fallback);
    c.threads = j.value("threads", c.threads);
    c.empirical_samples = j.value("empirical_samples", c.empirical_samples);
    if (j.contains("empirical_rho")) c.empirical_rho = j.at("empirical_rho").get<std::vector<double>>();
    if (j.contains("empirical_beta"))
      c.empirical_beta = j.at("empirical_beta").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("experiment: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  return experiment_from_json(j);
}

namespace {

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void add(const CMatrix& m) { add(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size())); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

struct Group {
  int first = 0;
  int T = 0;
  CMatrix H;      // channel used by the detectors
  double N0 = 0;
  CMatrix Y;
  std::vector<int> symbols;  // t * U + u
};

struct Trial {
  std::vector<std::vector<std::uint8_t>> payload;
  std::vector<std::vector<int>> symbols;  // [u][subcarrier]
  std::vector<Group> groups;
  std::uint64_t hash = 0;
};

std::uint64_t interleaver_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, {0x1EAFu}); }

Trial make_trial(const ExperimentConfig& cfg, const Constellation& c, const CodeConfig& code,
                 std::size_t snr_index, long index) {
  const int U = cfg.scenario.U;
  const int bps = c.bits_per_symbol;
  const double snr = cfg.snr_db[snr_index];
  Philox rng(derive_seed(cfg.seed, {0x7121A1u, snr_index, static_cast<std::uint64_t>(index)}));
  Trial t;
  Fnv1a hash;
  t.payload.resize(U);
  t.symbols.assign(U, std::vector<int>(cfg.n_data));
  for (int u = 0; u < U; ++u) {
    t.payload[u].resize(code.payload_bits());
    for (auto& b : t.payload[u]) b = static_cast<std::uint8_t>(rng.below(2));
    const std::vector<std::uint8_t> coded = interleave(encode(t.payload[u], code), code.interleaver_seed);
    for (int n = 0; n < cfg.n_data; ++n)
      t.symbols[u][n] = c.map(std::span<const std::uint8_t>(coded).subspan(
          static_cast<std::size_t>(n) * bps, bps));
  }
  const int group = cfg.coherence_group == 0 ? cfg.n_data : cfg.coherence_group;
  for (int first = 0; first < cfg.n_data; first += group) {
    Group g;
    g.first = first;
    g.T = std::min(group, cfg.n_data - first);
    ChannelRealization ch = gen_channel(cfg.scenario.B, U, cfg.scenario.channel, rng);
    g.N0 = noise_variance_for_snr(ch.H, 1.0, snr);
    g.symbols.resize(static_cast<std::size_t>(g.T) * U);
    for (int k = 0; k < g.T; ++k)
      for (int u = 0; u < U; ++u) g.symbols[static_cast<std::size_t>(k) * U + u] = t.symbols[u][first + k];
    TransmissionBatch tx = transmit_symbols(ch.H, c, g.symbols, g.T, g.N0, rng);
    hash.add(ch.H);
    hash.add(g.symbols.data(), g.symbols.size() * sizeof(int));
    hash.add(tx.N);
    g.Y = std::move(tx.Y);
    g.H = cfg.csi == Csi::LeastSquares ? estimate_channel(ch, g.N0, 1.0, rng).H : std::move(ch.H);
    if (cfg.csi == Csi::LeastSquares) hash.add(g.H);
    t.groups.push_back(std::move(g));
  }
  t.hash = hash.value();
  return t;
}

std::vector<SoftOutput> run_detector(const DetectorSpec& d, const Group& g, const Constellation& c) {
  switch (d.kind) {
    case DetectorKind::Gbcd:
      return d.fixed_point ? gbcd_detect_fixed(g.H, g.Y, g.N0, 1.0, d.gbcd, c)
                           : gbcd_detect(g.H, g.Y, g.N0, 1.0, d.gbcd, c);
    case DetectorKind::Lmmse: return lmmse_detect(g.H, g.Y, g.N0, 1.0, c);
    case DetectorKind::Ocd: return ocd_detect(g.H, g.Y, g.N0, 1.0, d.iterations, c);
  }
  return {};
}

struct TrialResult {
  std::vector<DetectorCounts> counts;
  std::uint64_t hash = 0;
};

TrialResult evaluate_trial(const Trial& t, const std::vector<DetectorSpec>& detectors,
                           const Constellation& c, const CodeConfig& code, int U, int n_data) {
  const int bps = c.bits_per_symbol;
  TrialResult r;
  r.hash = t.hash;
  for (const DetectorSpec& d : detectors) {
    DetectorCounts counts;
    std::vector<std::vector<double>> llr(U, std::vector<double>(static_cast<std::size_t>(n_data) * bps));
    for (const Group& g : t.groups) {
      const std::vector<SoftOutput> out = run_detector(d, g, c);
      for (int k = 0; k < g.T; ++k) {
        const std::vector<int> hard = hard_symbols(out[k].llr, c);
        for (int u = 0; u < U; ++u) {
          for (int b = 0; b < bps; ++b)
            llr[u][static_cast<std::size_t>(g.first + k) * bps + b] = out[k].llr(u, b);
          counts.symbol_errors += hard[u] != g.symbols[static_cast<std::size_t>(k) * U + u];
          ++counts.symbols;
        }
      }
    }
    for (int u = 0; u < U; ++u) {
      const std::vector<double> dec = to_decoder_llrs(deinterleave_llrs(llr[u], code.interleaver_seed));
      counts.block_errors += decode(dec, code, t.payload[u]).block_ok ? 0 : 1;
    }
    r.counts.push_back(counts);
  }
  return r;
}

std::uint64_t combine_hash(std::uint64_t acc, std::uint64_t h) {
  return derive_seed(acc, {h});
}

}  // namespace

PointResult simulate_point(const ExperimentConfig& cfg, const std::vector<DetectorSpec>& detectors,
                           std::size_t snr_index) {
  const Constellation c = make_constellation(cfg.scenario.order);
  const int U = cfg.scenario.U;
  const CodeConfig code = make_code_config(
      cfg.scenario.rate, static_cast<std::size_t>(cfg.n_data) * c.bits_per_symbol, interleaver_seed(cfg));
  const long max_trials = (cfg.max_blocks + U - 1) / U;

  PointResult p;
  p.snr_db = cfg.snr_db[snr_index];
  p.counts.assign(detectors.size(), {});
  long done = 0;
  while (done < max_trials) {
    const long n = std::min<long>(cfg.chunk, max_trials - done);
    std::vector<TrialResult> results(static_cast<std::size_t>(n));
    parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
      const Trial t = make_trial(cfg, c, code, snr_index, done + static_cast<long>(i));
      results[i] = evaluate_trial(t, detectors, c, code, U, cfg.n_data);
    });
    for (const TrialResult& r : results) {
      for (std::size_t d = 0; d < detectors.size(); ++d) {
        p.counts[d].block_errors += r.counts[d].block_errors;
        p.counts[d].symbol_errors += r.counts[d].symbol_errors;
        p.counts[d].symbols += r.counts[d].symbols;
      }
      p.data_hash = combine_hash(p.data_hash, r.hash);
      p.blocks += U;
    }
    done += n;
    const bool enough = std::all_of(p.counts.begin(), p.counts.end(), [&](const DetectorCounts& k) {
      return k.block_errors >= cfg.min_block_errors;
    });
    if (enough) break;
  }
  return p;
}

namespace {

DetectorSpec gbcd_spec(const std::string& name, const ExperimentConfig& cfg, const Constellation& c,
                       int block_size, bool sort) {
  DetectorSpec d;
  d.name = name;
  d.kind = DetectorKind::Gbcd;
  d.gbcd.iterations = cfg.iterations;
  d.gbcd.preprocess.block_size = block_size;
  d.gbcd.preprocess.sort = sort;
  d.gbcd.denoiser = box_schedule(c);
  d.fixed_point = cfg.fixed_point;
  return d;
}

DetectorSpec trained_spec(const std::string& name, const ExperimentConfig& cfg,
                          const Constellation& c, double snr_db, const ParamStore* store,
                          std::vector<std::string>* notes) {
  DetectorSpec d = gbcd_spec(name, cfg, c, cfg.block_size, cfg.sort);
  ParamLookup q;
  if (store != nullptr) {
    q = store->lookup(cfg.scenario.order, cfg.scenario.channel.condition, cfg.iterations, snr_db);
  } else if (snr_db < kMinTrainedSnrDb) {
    q.kind = ParamLookup::Kind::Box;
    q.note = "SNR below trained range; using BOX denoiser";
  } else {
    q.note = "no parameter file given";
  }
  std::ostringstream prefix;
  prefix << name << " @ " << snr_db << " dB: ";
  switch (q.kind) {
    case ParamLookup::Kind::Trained:
      d.gbcd.denoiser = pme_schedule(q.record.params.rho, q.record.params.beta, c);
      d.gbcd.alpha = q.record.params.alpha;
      if (notes != nullptr && !q.note.empty()) notes->push_back(prefix.str() + q.note);
      break;
    case ParamLookup::Kind::Box:
      if (notes != nullptr) notes->push_back(prefix.str() + q.note);
      break;
    case ParamLookup::Kind::Missing:
      if (!cfg.allow_box_fallback) throw MissingParams(prefix.str() + q.note);
      if (notes != nullptr) notes->push_back(prefix.str() + q.note + "; falling back to BOX");
      break;
  }
  return d;
}

std::optional<ParamStore> open_store(const ExperimentConfig& cfg) {
  if (cfg.params_path.empty()) return std::nullopt;
  std::ifstream probe(cfg.params_path);
  if (!probe) {
    if (cfg.allow_box_fallback) return std::nullopt;
    throw MissingParams("parameter file " + cfg.params_path + " not found");
  }
  return ParamStore::load(cfg.params_path);
}

}  // namespace

std::vector<DetectorSpec> resolve_detectors(const ExperimentConfig& cfg, double snr_db,
                                            const ParamStore* store, std::vector<std::string>* notes) {
  const Constellation c = make_constellation(cfg.scenario.order);
  std::vector<DetectorSpec> out;
  for (const std::string& name : cfg.detectors) {
    if (name == "gbcd-box") {
      out.push_back(gbcd_spec(name, cfg, c, cfg.block_size, cfg.sort));
    } else if (name == "gbcd-pme") {
      out.push_back(trained_spec(name, cfg, c, snr_db, store, notes));
    } else if (name == "lmmse") {
      DetectorSpec d;
      d.name = name;
      d.kind = DetectorKind::Lmmse;
      out.push_back(d);
    } else if (name == "ocd") {
      DetectorSpec d;
      d.name = name;
      d.kind = DetectorKind::Ocd;
      d.iterations = cfg.iterations;
      out.push_back(d);
    } else {
      throw InvalidArgument("unknown detector '" + name + "'");
    }
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::vector<std::string>* notes) {
  cfg.validate();
  const std::optional<ParamStore> store = open_store(cfg);
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
    const std::vector<DetectorSpec> dets =
        resolve_detectors(cfg, cfg.snr_db[s], store ? &*store : nullptr, notes);
    const PointResult p = simulate_point(cfg, dets, s);
    for (std::size_t d = 0; d < dets.size(); ++d) {
      SweepRow r;
      r.snr_db = p.snr_db;
      r.detector = dets[d].name;
      r.trials = p.blocks;
      r.block_errors = p.counts[d].block_errors;
      r.bler = static_cast<double>(r.block_errors) / static_cast<double>(p.blocks);
      r.ser = static_cast<double>(p.counts[d].symbol_errors) / static_cast<double>(p.counts[d].symbols);
      rows.push_back(r);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "snr_db,detector,bler,ser,trials,block_errors\n";
  out << std::setprecision(10);
  for (const SweepRow& r : rows)
    out << r.snr_db << ',' << r.detector << ',' << r.bler << ',' << r.ser << ',' << r.trials << ','
        << r.block_errors << '\n';
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, std::vector<std::string>* notes) {
  cfg.validate();
  const Constellation c = make_constellation(cfg.scenario.order);
  const std::optional<ParamStore> store = open_store(cfg);
  std::vector<AblationRow> rows;
  for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
    const double snr = cfg.snr_db[s];
    std::vector<DetectorSpec> dets;
    DetectorSpec cd;
    cd.name = "cd_box";
    cd.kind = DetectorKind::Ocd;
    cd.iterations = cfg.iterations;
    dets.push_back(cd);
    dets.push_back(gbcd_spec("cd_box_sort", cfg, c, 1, true));
    dets.push_back(gbcd_spec("gbcd_box", cfg, c, cfg.block_size, false));
    dets.push_back(gbcd_spec("gbcd_box_sort", cfg, c, cfg.block_size, true));

    PreprocessOptions pre;
    pre.block_size = cfg.block_size;
    pre.sort = true;
    const std::vector<TrainSample> val =
        make_samples(cfg.scenario, snr, pre, cfg.empirical_samples,
                     derive_seed(cfg.seed, {0xE3u, s}), cfg.threads);
    const UnfoldParams emp = grid_search_pme(val, c, cfg.iterations, nominal_alpha(cfg.scenario.U, snr),
                                             cfg.empirical_rho, cfg.empirical_beta, cfg.threads);
    DetectorSpec e = gbcd_spec("gbcd_pme_empirical", cfg, c, cfg.block_size, true);
    e.gbcd.denoiser = pme_schedule(emp.rho, emp.beta, c);
    dets.push_back(e);
    dets.push_back(trained_spec("gbcd_pme_trained", cfg, c, snr, store ? &*store : nullptr, notes));

    const PointResult p = simulate_point(cfg, dets, s);
    AblationRow r;
    r.snr_db = snr;
    r.trials = p.blocks;
    r.data_hash = p.data_hash;
    r.empirical_rho = emp.rho.front();
    r.empirical_beta = emp.beta.front();
    for (const DetectorCounts& k : p.counts) {
      r.bler.push_back(static_cast<double>(k.block_errors) / static_cast<double>(p.blocks));
      r.ser.push_back(static_cast<double>(k.symbol_errors) / static_cast<double>(k.symbols));
      r.block_errors.push_back(k.block_errors);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "snr_db,trials";
  for (const std::string& v : ablation_variants()) out << ',' << v << "_bler," << v << "_ser," << v << "_block_errors";
  out << ",empirical_rho,empirical_beta,data_hash\n";
  out << std::setprecision(10);
  for (const AblationRow& r : rows) {
    out << r.snr_db << ',' << r.trials;
    for (std::size_t i = 0; i < r.bler.size(); ++i)
      out << ',' << r.bler[i] << ',' << r.ser[i] << ',' << r.block_errors[i];
    out << ',' << r.empirical_rho << ',' << r.empirical_beta << ',' << std::hex << std::setw(16)
        << std::setfill('0') << r.data_hash << std::dec << std::setfill(' ') << '\n';
  }
}

void write_first_trace(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Constellation c = make_constellation(cfg.scenario.order);
  const CodeConfig code = make_code_config(
      cfg.scenario.rate, static_cast<std::size_t>(cfg.n_data) * c.bits_per_symbol, interleaver_seed(cfg));
  const Trial t = make_trial(cfg, c, code, 0, 0);
  const Group& g = t.groups.front();
  PreprocessOptions pre;
  pre.block_size = cfg.block_size;
  pre.sort = cfg.sort;
  const Preprocessed prep = preprocess(g.H, g.N0, 1.0, pre);
  std::vector<TraceRow> trace;
  EqualizeOptions opts;
  opts.trace = &trace;
  gbcd_equalize(prep, matched_filter(g.H, g.Y.col(0)), cfg.iterations, box_schedule(c), opts);
  write_trace_csv(out, trace);
}

}  // namespace gbcd
