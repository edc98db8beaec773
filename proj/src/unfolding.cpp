// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/unfolding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "gbcd/channel.hpp"
#include "gbcd/parallel.hpp"
#include "gbcd/rng.hpp"

namespace gbcd {

std::vector<double> UnfoldParams::flatten() const {
  std::vector<double> out(rho);
  out.insert(out.end(), beta.begin(), beta.end());
  out.push_back(alpha);
  return out;
}

UnfoldParams UnfoldParams::unflatten(const std::vector<double>& flat) {
  if (flat.size() < 3 || flat.size() % 2 == 0)
    throw InvalidArgument("UnfoldParams: flat vector must hold 2K+1 values");
  const std::size_t K = (flat.size() - 1) / 2;
  UnfoldParams p;
  p.rho.assign(flat.begin(), flat.begin() + K);
  p.beta.assign(flat.begin() + K, flat.begin() + 2 * K);
  p.alpha = flat.back();
  return p;
}

void UnfoldParams::validate() const {
  if (rho.empty() || rho.size() != beta.size())
    throw InvalidArgument("UnfoldParams: rho and beta must be non-empty and equally long");
  for (std::size_t k = 0; k < rho.size(); ++k)
    if (!(rho[k] > 0.0) || !(beta[k] > 0.0) || !std::isfinite(rho[k]) || !std::isfinite(beta[k]))
      throw InvalidArgument("UnfoldParams: rho and beta must be positive and finite");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw InvalidArgument("UnfoldParams: alpha must be non-negative and finite");
}

UnfoldParams UnfoldParams::box_equivalent(int K, double alpha) {
  UnfoldParams p;
  p.rho.assign(static_cast<std::size_t>(K), 1.0);
  p.beta.assign(static_cast<std::size_t>(K), 1.0);
  p.alpha = alpha;
  return p;
}

TrainSample make_sample(const CMatrix& H, const CVector& y, std::vector<int> symbols, double N0,
                        const Constellation& c, const PreprocessOptions& options) {
  TrainSample s;
  s.prep = preprocess(H, N0, 1.0, options);
  s.y_mf = matched_filter(H, y);
  s.bits.resize(symbols.size() * static_cast<std::size_t>(c.bits_per_symbol));
  for (std::size_t u = 0; u < symbols.size(); ++u)
    c.demap(symbols[u], std::span<std::uint8_t>(s.bits).subspan(u * c.bits_per_symbol,
                                                               c.bits_per_symbol));
  s.symbols = std::move(symbols);
  return s;
}

std::vector<TrainSample> make_samples(const Scenario& scenario, double snr_db,
                                      const PreprocessOptions& options, int count,
                                      std::uint64_t seed, int threads) {
  const Constellation c = make_constellation(scenario.order);
  std::vector<TrainSample> out(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    Philox rng(derive_seed(seed, {i}));
    const ChannelRealization ch = gen_channel(scenario.B, scenario.U, scenario.channel, rng);
    TransmissionBatch tx = transmit(ch.H, c, 1, snr_db, rng);
    out[i] = make_sample(ch.H, tx.Y.col(0), std::move(tx.symbols), tx.N0, c, options);
  });
  return out;
}

double bce(double llr, int bit) {
  static const double kLimit = std::log((1.0 - kProbClamp) / kProbClamp);
  if (llr >= kLimit) return bit ? -std::log1p(-kProbClamp) : -std::log(kProbClamp);
  if (llr <= -kLimit) return bit ? -std::log(kProbClamp) : -std::log1p(-kProbClamp);
  // softplus(l) - X l, rewritten as softplus(+-l) so confident bits do not cancel.
  const double x = bit ? -llr : llr;
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

struct AxisDenoise {
  double value = 0.0;
  double d_x = 0.0;
  double d_rho = 0.0;
  double d_beta = 0.0;
  double margin = std::numeric_limits<double>::infinity();
};

// z = c * sum_k clip(rho (x/c + 2 beta k)), k = -gamma..gamma.
AxisDenoise pme_axis(double x, double rho, double beta, double scale, int gamma) {
  AxisDenoise d;
  const double t = x / scale;
  for (int k = -gamma; k <= gamma; ++k) {
    const double inner = t + 2.0 * beta * k;
    const double p = rho * inner;
    d.margin = std::min(d.margin, std::abs(std::abs(p) - 1.0));
    if (p > -1.0 && p < 1.0) {
      d.value += scale * p;
      d.d_x += rho;
      d.d_rho += scale * inner;
      d.d_beta += scale * 2.0 * rho * k;
    } else {
      d.value += p >= 1.0 ? scale : -scale;
    }
  }
  return d;
}

struct AxisLlr {
  double llr = 0.0;
  double d_x = 0.0;
  double d_mu = 0.0;  // with xi held fixed
  double argmin_margin = std::numeric_limits<double>::infinity();
};

AxisLlr axis_llr(double x, double mu, double xi, const Constellation& c, int b) {
  AxisLlr r;
  double best[2] = {std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
  double arg[2] = {0.0, 0.0};
  double prev[2] = {std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
  const double t = x / mu;
  for (int i = 0; i < c.pam_size; ++i) {
    const double a = c.pam[i];
    const int bit = c.pam_bit(i, b);
    if (!std::isnan(prev[bit]))
      r.argmin_margin = std::min(r.argmin_margin, std::abs(t - 0.5 * (a + prev[bit])) / c.scale);
    prev[bit] = a;
    const double d = (x - mu * a) * (x - mu * a);
    if (d < best[bit]) {
      best[bit] = d;
      arg[bit] = a;
    }
  }
  r.llr = (best[0] - best[1]) / xi;
  r.d_x = 2.0 * mu * (arg[1] - arg[0]) / xi;
  r.d_mu = (-2.0 * arg[0] * (x - mu * arg[0]) + 2.0 * arg[1] * (x - mu * arg[1])) / xi;
  return r;
}

struct Step {
  std::vector<cplx> v;
};

}  // namespace

ForwardResult unfold_forward(const UnfoldParams& params, const TrainSample& sample,
                             const Constellation& c, bool with_grad) {
  const Preprocessed& prep = sample.prep;
  const int K = params.iterations();
  const Eigen::Index U = prep.G.rows();
  const int L = prep.block_size;
  const std::size_t M = prep.blocks.size();
  const int gamma = c.pam_size / 2 - 1;
  const double scale = c.scale;
  const double Es = prep.Es;
  static const double kClampLimit = std::log((1.0 - kProbClamp) / kProbClamp);

  ForwardResult out;
  out.margins.clip = std::numeric_limits<double>::infinity();
  out.margins.argmin = std::numeric_limits<double>::infinity();
  out.margins.clamp = std::numeric_limits<double>::infinity();

  CVector z = CVector::Zero(U);
  CVector r = sample.y_mf;
  CVector s_hat = CVector::Zero(U);
  std::vector<Step> tape;
  if (with_grad) tape.resize(static_cast<std::size_t>(K) * M);

  std::vector<cplx> v(L), dz(L);
  for (int k = 0; k < K; ++k) {
    const double rho = params.rho[k];
    const double beta = params.beta[k];
    for (std::size_t m = 0; m < M; ++m) {
      const std::vector<int>& a = prep.blocks[m];
      const CMatrix& kinv = prep.block_inverse[m];
      for (int i = 0; i < L; ++i) {
        cplx acc = z[a[i]];
        for (int j = 0; j < L; ++j) acc += kinv(i, j) * r[a[j]];
        v[i] = acc;
      }
      for (int i = 0; i < L; ++i) {
        const AxisDenoise re = pme_axis(v[i].real(), rho, beta, scale, gamma);
        const AxisDenoise im = pme_axis(v[i].imag(), rho, beta, scale, gamma);
        out.margins.clip = std::min({out.margins.clip, re.margin, im.margin});
        const cplx zn(re.value, im.value);
        dz[i] = zn - z[a[i]];
        z[a[i]] = zn;
        if (k == K - 1) s_hat[a[i]] = v[i];
      }
      for (Eigen::Index row = 0; row < U; ++row) {
        cplx acc{};
        for (int j = 0; j < L; ++j) acc += prep.G(row, a[j]) * dz[j];
        r[row] -= acc;
      }
      if (with_grad) tape[static_cast<std::size_t>(k) * M + m].v = v;
    }
  }

  // LLR stage.
  const int bps = c.bits_per_symbol;
  const int bpa = c.bits_per_axis;
  out.llr.resize(U, bps);
  out.s_hat = s_hat;
  CVector s_bar = CVector::Zero(U);
  double alpha_bar = 0.0;
  for (Eigen::Index u = 0; u < U; ++u) {
    const double g = prep.G(u, u).real();
    const double mu = g / (g + params.alpha);
    double xi = Es * (1.0 - mu) * mu;
    const bool floored = !(xi >= kXiFloorRelative * Es);
    if (floored) {
      xi = kXiFloorRelative * Es;
      out.margins.xi_floored = true;
    }
    const double axis[2] = {s_hat[u].real(), s_hat[u].imag()};
    double x_bar[2] = {0.0, 0.0};
    double mu_bar = 0.0;
    for (int ax = 0; ax < 2; ++ax) {
      for (int b = 0; b < bpa; ++b) {
        const AxisLlr l = axis_llr(axis[ax], mu, xi, c, b);
        const int col = ax * bpa + b;
        const int bit = sample.bits[static_cast<std::size_t>(u) * bps + col];
        out.llr(u, col) = l.llr;
        out.loss += bce(l.llr, bit);
        out.margins.argmin = std::min(out.margins.argmin, l.argmin_margin);
        out.margins.clamp = std::min(out.margins.clamp, std::abs(std::abs(l.llr) - kClampLimit));
        if (!with_grad || std::abs(l.llr) >= kClampLimit) continue;
        const double l_bar = llr_to_prob(l.llr) - bit;
        x_bar[ax] += l_bar * l.d_x;
        double d_mu = l.d_mu;
        if (!floored) d_mu -= l.llr / xi * Es * (1.0 - 2.0 * mu);
        mu_bar += l_bar * d_mu;
      }
    }
    s_bar[u] = cplx(x_bar[0], x_bar[1]);
    alpha_bar += mu_bar * (-g / ((g + params.alpha) * (g + params.alpha)));
  }
  if (!with_grad) return out;

  // Reverse pass through the unrolled equalizer.
  std::vector<double> rho_bar(K, 0.0), beta_bar(K, 0.0);
  CVector z_bar = CVector::Zero(U);
  CVector r_bar = CVector::Zero(U);
  std::vector<cplx> zn_bar(L), v_bar(L), ghr(L);
  for (int k = K - 1; k >= 0; --k) {
    const double rho = params.rho[k];
    const double beta = params.beta[k];
    for (std::size_t m = M; m-- > 0;) {
      const std::vector<int>& a = prep.blocks[m];
      const CMatrix& kinv = prep.block_inverse[m];
      const std::vector<cplx>& vs = tape[static_cast<std::size_t>(k) * M + m].v;
      for (int j = 0; j < L; ++j) {
        cplx acc{};
        for (Eigen::Index row = 0; row < U; ++row) acc += std::conj(prep.G(row, a[j])) * r_bar[row];
        ghr[j] = acc;
        zn_bar[j] = z_bar[a[j]] - acc;
      }
      for (int i = 0; i < L; ++i) {
        const AxisDenoise re = pme_axis(vs[i].real(), rho, beta, scale, gamma);
        const AxisDenoise im = pme_axis(vs[i].imag(), rho, beta, scale, gamma);
        v_bar[i] = cplx(re.d_x * zn_bar[i].real(), im.d_x * zn_bar[i].imag());
        rho_bar[k] += re.d_rho * zn_bar[i].real() + im.d_rho * zn_bar[i].imag();
        beta_bar[k] += re.d_beta * zn_bar[i].real() + im.d_beta * zn_bar[i].imag();
        if (k == K - 1) v_bar[i] += s_bar[a[i]];
      }
      for (int i = 0; i < L; ++i) z_bar[a[i]] = ghr[i] + v_bar[i];
      for (int j = 0; j < L; ++j) {
        cplx acc{};
        for (int i = 0; i < L; ++i) acc += std::conj(kinv(i, j)) * v_bar[i];
        r_bar[a[j]] += acc;
      }
    }
  }
  out.grad.assign(params.size(), 0.0);
  for (int k = 0; k < K; ++k) {
    out.grad[k] = rho_bar[k];
    out.grad[K + k] = beta_bar[k];
  }
  out.grad[2 * K] = alpha_bar;
  return out;
}

double forward_loss(const UnfoldParams& params, const std::vector<TrainSample>& batch,
                    const Constellation& c, int threads) {
  if (batch.empty()) throw InvalidArgument("forward_loss: empty batch");
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), threads,
               [&](std::size_t i) { losses[i] = unfold_forward(params, batch[i], c, false).loss; });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(batch.size());
}

LossGrad loss_and_grad(const UnfoldParams& params, const std::vector<TrainSample>& batch,
                       const Constellation& c, int threads,
                       const std::vector<std::size_t>* subset) {
  const std::size_t n = subset != nullptr ? subset->size() : batch.size();
  if (n == 0) throw InvalidArgument("loss_and_grad: empty batch");
  std::vector<ForwardResult> results(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::size_t idx = subset != nullptr ? (*subset)[i] : i;
    results[i] = unfold_forward(params, batch[idx], c, true);
  });
  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  for (const ForwardResult& r : results) {
    out.loss += r.loss;
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += r.grad[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"iterations", "train_samples", "val_samples", "batch_size", "max_epochs",
                       "learning_rate", "lr_decay", "plateau_epochs", "patience", "block_size",
                       "sort", "alpha_init"},
                      "training");
  TrainConfig t;
  try {
    t.iterations = j.value("iterations", t.iterations);
    t.train_samples = j.value("train_samples", t.train_samples);
    t.val_samples = j.value("val_samples", t.val_samples);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_epochs = j.value("max_epochs", t.max_epochs);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.lr_decay = j.value("lr_decay", t.lr_decay);
    t.plateau_epochs = j.value("plateau_epochs", t.plateau_epochs);
    t.patience = j.value("patience", t.patience);
    t.preprocess.block_size = j.value("block_size", t.preprocess.block_size);
    t.preprocess.sort = j.value("sort", t.preprocess.sort);
    if (j.contains("alpha_init")) t.alpha_init = j.at("alpha_init").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("training: ") + e.what());
  }
  if (t.iterations < 1 || t.train_samples < 1 || t.val_samples < 1 || t.batch_size < 1 ||
      t.max_epochs < 0 || !(t.learning_rate > 0.0) || t.patience < 1)
    throw InvalidArgument("training: values out of range");
  return t;
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

UnfoldParams from_theta(const std::vector<double>& theta, int K) {
  UnfoldParams p;
  p.rho.resize(K);
  p.beta.resize(K);
  for (int k = 0; k < K; ++k) {
    p.rho[k] = std::exp(theta[k]);
    p.beta[k] = std::exp(theta[K + k]);
  }
  p.alpha = softplus(theta[2 * K]);
  return p;
}

}  // namespace

UnfoldParams train_params(const std::vector<TrainSample>& train,
                          const std::vector<TrainSample>& val, const Constellation& c,
                          const UnfoldParams& init, const TrainConfig& cfg,
                          TrainHistory* history) {
  init.validate();
  if (train.empty() || val.empty()) throw InvalidArgument("train: empty sample set");
  const int K = init.iterations();
  const std::size_t P = init.size();
  std::vector<double> theta(P);
  for (int k = 0; k < K; ++k) {
    theta[k] = std::log(init.rho[k]);
    theta[K + k] = std::log(init.beta[k]);
  }
  theta[2 * K] = softplus_inv(std::max(init.alpha, 1e-12));

  std::vector<double> m1(P, 0.0), m2(P, 0.0);
  constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
  double lr = cfg.learning_rate;
  long step = 0;

  UnfoldParams best = from_theta(theta, K);
  double best_loss = forward_loss(best, val, c, cfg.threads);
  if (!std::isfinite(best_loss)) throw NumericalError("train: initial validation loss is not finite");
  if (history != nullptr) {
    history->val_loss = {best_loss};
    history->learning_rate = {lr};
    history->best_epoch = 0;
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0, since_plateau = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Philox rng(derive_seed(cfg.seed, {0x5EEDu, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      const UnfoldParams p = from_theta(theta, K);
      const LossGrad lg = loss_and_grad(p, train, c, cfg.threads, &idx);
      if (!std::isfinite(lg.loss))
        throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
      ++step;
      for (std::size_t j = 0; j < P; ++j) {
        double g = lg.grad[j];
        if (j < static_cast<std::size_t>(K)) g *= p.rho[j];
        else if (j < static_cast<std::size_t>(2 * K)) g *= p.beta[j - K];
        else g *= sigmoid(theta[j]);
        m1[j] = kB1 * m1[j] + (1.0 - kB1) * g;
        m2[j] = kB2 * m2[j] + (1.0 - kB2) * g * g;
        const double mh = m1[j] / (1.0 - std::pow(kB1, static_cast<double>(step)));
        const double vh = m2[j] / (1.0 - std::pow(kB2, static_cast<double>(step)));
        theta[j] -= lr * mh / (std::sqrt(vh) + kEps);
      }
    }
    const UnfoldParams current = from_theta(theta, K);
    const double val_loss = forward_loss(current, val, c, cfg.threads);
    if (!std::isfinite(val_loss))
      throw NumericalError("train: validation loss diverged at epoch " + std::to_string(epoch));
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = current;
      since_best = 0;
      since_plateau = 0;
      if (history != nullptr) history->best_epoch = epoch;
    } else {
      ++since_best;
      if (++since_plateau >= cfg.plateau_epochs) {
        lr *= cfg.lr_decay;
        since_plateau = 0;
      }
    }
    if (history != nullptr) {
      history->val_loss.push_back(val_loss);
      history->learning_rate.push_back(lr);
    }
    if (since_best >= cfg.patience) break;
  }
  return best;
}

double nominal_alpha(int U, double snr_db) {
  // E||H||_F^2 = B U for unit-variance entries.
  return static_cast<double>(U) * std::pow(10.0, -snr_db / 10.0);
}

TrainedParams train(const Scenario& scenario, double snr_db, const TrainConfig& cfg,
                    TrainHistory* history) {
  scenario.validate();
  const Constellation c = make_constellation(scenario.order);
  const std::vector<TrainSample> tr = make_samples(
      scenario, snr_db, cfg.preprocess, cfg.train_samples, derive_seed(cfg.seed, {1}), cfg.threads);
  const std::vector<TrainSample> va = make_samples(
      scenario, snr_db, cfg.preprocess, cfg.val_samples, derive_seed(cfg.seed, {2}), cfg.threads);
  const UnfoldParams init = UnfoldParams::box_equivalent(
      cfg.iterations, cfg.alpha_init.value_or(nominal_alpha(scenario.U, snr_db)));
  TrainHistory local;
  TrainHistory& h = history != nullptr ? *history : local;
  TrainedParams out;
  out.order = scenario.order;
  out.condition = scenario.channel.condition;
  out.snr_db = snr_db;
  out.B = scenario.B;
  out.U = scenario.U;
  out.seed = cfg.seed;
  out.params = train_params(tr, va, c, init, cfg, &h);
  out.epochs = static_cast<int>(h.val_loss.size()) - 1;
  out.val_loss = h.val_loss[static_cast<std::size_t>(h.best_epoch)];
  return out;
}

UnfoldParams grid_search_pme(const std::vector<TrainSample>& val, const Constellation& c, int K,
                             double alpha, const std::vector<double>& rho_grid,
                             const std::vector<double>& beta_grid, int threads) {
  if (rho_grid.empty() || beta_grid.empty()) throw InvalidArgument("grid_search_pme: empty grid");
  UnfoldParams best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double rho : rho_grid) {
    for (double beta : beta_grid) {
      UnfoldParams p;
      p.rho.assign(static_cast<std::size_t>(K), rho);
      p.beta.assign(static_cast<std::size_t>(K), beta);
      p.alpha = alpha;
      const double loss = forward_loss(p, val, c, threads);
      if (loss < best_loss) {
        best_loss = loss;
        best = p;
      }
    }
  }
  return best;
}

void ParamStore::put(const TrainedParams& p) {
  p.params.validate();
  for (TrainedParams& r : records_) {
    if (r.order == p.order && r.condition == p.condition && r.snr_db == p.snr_db &&
        r.params.iterations() == p.params.iterations()) {
      r = p;
      return;
    }
  }
  records_.push_back(p);
}

ParamLookup ParamStore::lookup(int order, Condition condition, int K, double snr_db) const {
  ParamLookup out;
  if (snr_db < kMinTrainedSnrDb) {
    out.kind = ParamLookup::Kind::Box;
    out.note = "SNR below trained range; using BOX denoiser";
    return out;
  }
  double query = snr_db;
  if (snr_db > kMaxTrainedSnrDb) {
    query = kMaxTrainedSnrDb;
    out.fallback = true;
  }
  const TrainedParams* best = nullptr;
  for (const TrainedParams& r : records_) {
    if (r.order != order || r.condition != condition || r.params.iterations() != K) continue;
    if (best == nullptr || std::abs(r.snr_db - query) < std::abs(best->snr_db - query)) best = &r;
  }
  if (best == nullptr) {
    out.kind = ParamLookup::Kind::Missing;
    out.note = "no trained parameters for order " + std::to_string(order) + ", " +
               to_string(condition) + ", K=" + std::to_string(K);
    return out;
  }
  out.kind = ParamLookup::Kind::Trained;
  out.record = *best;
  if (best->snr_db != query) {
    std::ostringstream os;
    os << "using parameters trained at " << best->snr_db << " dB for " << snr_db << " dB";
    out.note = os.str();
  } else if (out.fallback) {
    out.note = "SNR above trained range; using 25 dB parameters";
  }
  return out;
}

nlohmann::json ParamStore::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const TrainedParams& r : records_) {
    nlohmann::json j;
    j["order"] = r.order;
    j["condition"] = to_string(r.condition);
    j["snr_db"] = r.snr_db;
    j["K"] = r.params.iterations();
    j["B"] = r.B;
    j["U"] = r.U;
    j["rho"] = r.params.rho;
    j["beta"] = r.params.beta;
    j["alpha"] = r.params.alpha;
    j["epochs"] = r.epochs;
    j["val_loss"] = r.val_loss;
    j["seed"] = r.seed;
    recs.push_back(std::move(j));
  }
  return {{"format", "gbcd-params"}, {"version", 1}, {"records", recs}};
}

ParamStore ParamStore::from_json(const nlohmann::json& j) {
  ParamStore store;
  try {
    if (j.at("format").get<std::string>() != "gbcd-params")
      throw InvalidArgument("param store: unexpected format tag");
    for (const auto& r : j.at("records")) {
      TrainedParams p;
      p.order = r.at("order").get<int>();
      p.condition = parse_condition(r.at("condition").get<std::string>());
      p.snr_db = r.at("snr_db").get<double>();
      p.B = r.value("B", 0);
      p.U = r.value("U", 0);
      p.params.rho = r.at("rho").get<std::vector<double>>();
      p.params.beta = r.at("beta").get<std::vector<double>>();
      p.params.alpha = r.at("alpha").get<double>();
      if (r.at("K").get<int>() != p.params.iterations())
        throw InvalidArgument("param store: K does not match parameter count");
      p.epochs = r.value("epochs", 0);
      p.val_loss = r.value("val_loss", 0.0);
      p.seed = r.value("seed", std::uint64_t{0});
      store.put(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("param store: ") + e.what());
  }
  return store;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << to_json().dump(2) << '\n';
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace gbcd
