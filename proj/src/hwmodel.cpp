// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gbcd/baselines.hpp"
#include "gbcd/channel.hpp"
#include "gbcd/rng.hpp"

namespace gbcd {

namespace {

std::uint64_t u64(int x) { return static_cast<std::uint64_t>(x); }

CMatrix random_channel(int B, int U, Philox& rng) {
  return gen_channel(B, U, ChannelOptions{}, rng).H;
}

CVector random_vector(int n, Philox& rng) {
  CVector y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.complex_normal(1.0);
  return y;
}

}  // namespace

ComplexityReport complexity_gbcd(int B, int U, int K) {
  if (B < 1 || U < 2 || K < 0) throw InvalidArgument("complexity_gbcd: invalid dimensions");
  ComplexityReport r{"gbcd", B, U, K, 2, 0, 0};
  const std::uint64_t b = u64(B), u = u64(U), k = u64(K);
  r.preprocessing = 2 * b * u * u + u * (2 * u + 2) + 3 * u;
  r.per_transmission = 4 * b * u + 8 * k * u + 4 * k * u * u;
  return r;
}

ComplexityReport measure_gbcd(int B, int U, int K, int L, std::uint64_t seed) {
  Philox rng(seed);
  const CMatrix H = random_channel(B, U, rng);
  const CVector y = random_vector(B, rng);
  const Constellation c = make_constellation(4);
  MulCounter pre, eq;
  PreprocessOptions opts;
  opts.block_size = L;
  const Preprocessed prep = preprocess(H, 0.1, 1.0, opts, &pre);
  const CVector y_mf = matched_filter(H, y, &eq);
  gbcd_equalize(prep, y_mf, K, box_schedule(c), {}, &eq);
  return {"gbcd", B, U, K, L, pre.real_mults, eq.real_mults};
}

ComplexityReport complexity_lmmse(int B, int U, std::uint64_t seed) {
  if (B < 1 || U < 1) throw InvalidArgument("complexity_lmmse: invalid dimensions");
  ComplexityReport r = measure_lmmse(B, U, seed);
  const std::uint64_t b = u64(B), u = u64(U);
  r.preprocessing = 2 * b * u * u + (2 * u * u * u - 2 * u) / 3;
  return r;
}

ComplexityReport measure_lmmse(int B, int U, std::uint64_t seed) {
  Philox rng(seed);
  const CMatrix H = random_channel(B, U, rng);
  const CVector y = random_vector(B, rng);
  MulCounter pre, eq;
  const LmmsePreprocessed prep = lmmse_preprocess(H, 0.1, 1.0, &pre);
  lmmse_equalize(prep, matched_filter(H, y, &eq), &eq);
  return {"lmmse", B, U, 0, 0, pre.real_mults, eq.real_mults};
}

ComplexityReport complexity_ocd(int B, int U, int K, std::uint64_t seed) {
  Philox rng(seed);
  const CMatrix H = random_channel(B, U, rng);
  const CVector y = random_vector(B, rng);
  const Constellation c = make_constellation(4);
  MulCounter pre, eq;
  const OcdPreprocessed prep = ocd_preprocess(H, 0.1, 1.0, &pre);
  ocd_equalize(H, prep, y, K, c, {}, &eq);
  return {"ocd", B, U, K, 1, pre.real_mults, eq.real_mults};
}

TimingModel TimingModel::for_dims(int B, int U) {
  return {static_cast<double>(U), static_cast<double>(B + U)};
}

double throughput(double T, int Q, int U, double f_clk_hz, const TimingModel& timing) {
  if (!(T >= 1.0)) throw InvalidArgument("throughput: T must be at least 1");
  return T / (timing.cycles_per_vector * T + timing.idle_cycles) * std::log2(Q) * U * f_clk_hz;
}

double asymptotic_throughput(int Q, int U, double f_clk_hz, const TimingModel& timing) {
  return std::log2(Q) * U * f_clk_hz / timing.cycles_per_vector;
}

double utilization(double T, const TimingModel& timing) {
  if (!(T >= 0.0)) throw InvalidArgument("utilization: T must be non-negative");
  return T / (T + timing.idle_cycles / timing.cycles_per_vector);
}

double power_model(double T, double p_tilde, double p_equ, const TimingModel& timing) {
  return p_tilde + utilization(T, timing) * p_equ;
}

PowerFit fit_power(const std::vector<std::pair<double, double>>& samples,
                   const TimingModel& timing) {
  std::set<double> distinct;
  for (const auto& s : samples) distinct.insert(s.first);
  if (distinct.size() < 2) throw InvalidArgument("fit_power: need at least two distinct T values");
  const double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [T, p] : samples) {
    const double x = utilization(T, timing);
    sx += x;
    sy += p;
    sxx += x * x;
    sxy += x * p;
  }
  const double det = n * sxx - sx * sx;
  PowerFit f;
  f.p_equ = (n * sxy - sx * sy) / det;
  f.p_tilde = (sy - f.p_equ * sx) / n;
  const double mean = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [T, p] : samples) {
    const double e = p - power_model(T, f.p_tilde, f.p_equ, timing);
    ss_res += e * e;
    ss_tot += (p - mean) * (p - mean);
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

double FxpFormat::lsb() const { return std::ldexp(1.0, -frac); }
double FxpFormat::max_value() const { return (std::ldexp(1.0, bits - 1) - 1.0) * lsb(); }
double FxpFormat::min_value() const { return -std::ldexp(1.0, bits - 1) * lsb(); }

double quantize(double x, const FxpFormat& f) {
  const double code = std::nearbyint(x / f.lsb());
  const double hi = std::ldexp(1.0, f.bits - 1) - 1.0;
  const double lo = -std::ldexp(1.0, f.bits - 1);
  return std::clamp(code, lo, hi) * f.lsb();
}

cplx quantize(cplx x, const FxpFormat& f) { return {quantize(x.real(), f), quantize(x.imag(), f)}; }

CMatrix quantize(const CMatrix& m, const FxpFormat& f) {
  return m.unaryExpr([&f](cplx x) { return quantize(x, f); });
}

int integer_bits_for(double magnitude) {
  if (!(magnitude > 0.0)) return 0;
  return static_cast<int>(std::floor(std::log2(magnitude))) + 1;
}

FxpConfig frozen_fxp_config() {
  FxpConfig c;
  c.h = {12, 9};
  c.y = {12, 6};
  c.g = {15, 6};
  c.y_mf = {18, 8};
  c.z = {11, 9};
  c.llr = {18, 4};
  return c;
}

namespace {

double max_component(const CMatrix& m) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      out = std::max({out, std::abs(m(i, j).real()), std::abs(m(i, j).imag())});
  return out;
}

double percentile(std::vector<double> v, double pct) {
  const std::size_t idx = std::min(
      v.size() - 1, static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(v.size()))) - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

}  // namespace

FxpProfile profile_fxp(const FxpProfileSpec& spec) {
  if (spec.realizations < 1) throw InvalidArgument("profile_fxp: need realizations");
  const Constellation c = make_constellation(spec.order);
  const DenoiserSchedule box = box_schedule(c);
  constexpr int kSignals = 6;
  std::vector<std::vector<double>> maxima(kSignals);
  for (int r = 0; r < spec.realizations; ++r) {
    Philox rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(r)}));
    const double snr = spec.snr_min_db + (spec.snr_max_db - spec.snr_min_db) * rng.uniform();
    const CMatrix H = gen_channel(spec.B, spec.U, ChannelOptions{}, rng).H;
    const TransmissionBatch tx = transmit(H, c, 1, snr, rng);
    const Preprocessed prep = preprocess(H, tx.N0, 1.0);
    const CVector y_mf = matched_filter(H, tx.Y.col(0));
    const EqualizerState st = gbcd_equalize(prep, y_mf, spec.K, box);
    const SoftOutput so = compute_llrs(st.v_last, prep.G, 1.0, tx.N0, c);
    maxima[0].push_back(max_component(H));
    maxima[1].push_back(max_component(tx.Y));
    maxima[2].push_back(max_component(prep.G));
    maxima[3].push_back(max_component(y_mf));
    maxima[4].push_back(max_component(st.z));
    maxima[5].push_back(so.llr.cwiseAbs().maxCoeff());
  }
  FxpProfile out;
  FxpFormat* formats[kSignals] = {&out.config.h, &out.config.y, &out.config.g,
                                  &out.config.y_mf, &out.config.z, &out.config.llr};
  for (int s = 0; s < kSignals; ++s) {
    const double mag = percentile(maxima[s], spec.percentile);
    out.magnitudes.push_back(mag);
    formats[s]->frac = formats[s]->bits - 1 - integer_bits_for(mag);
  }
  return out;
}

ReciprocalLut::ReciprocalLut(int segments) : segments_(segments) {
  if (segments < 1) throw InvalidArgument("ReciprocalLut: need at least one segment");
  slope_.resize(segments);
  bias_.resize(segments);
  for (int s = 0; s < segments; ++s) {
    const double m0 = 1.0 + static_cast<double>(s) / segments;
    const double m1 = 1.0 + static_cast<double>(s + 1) / segments;
    slope_[s] = -1.0 / (m0 * m1);
    bias_[s] = 1.0 / m0 - slope_[s] * m0;
  }
}

double ReciprocalLut::operator()(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw NumericalError("ReciprocalLut: argument must be positive");
  int e = 0;
  const double m = 2.0 * std::frexp(x, &e);  // x = m * 2^(e-1), m in [1, 2)
  const int s = std::min(segments_ - 1, static_cast<int>((m - 1.0) * segments_));
  return std::ldexp(slope_[s] * m + bias_[s], 1 - e);
}

std::vector<SoftOutput> gbcd_detect_fixed(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                          const GbcdConfig& config, const Constellation& c,
                                          const FxpConfig& fxp) {
  const ReciprocalLut lut;
  const std::function<double(double)> recip = [&lut](double x) { return lut(x); };
  const CMatrix Hq = quantize(H, fxp.h);
  const CMatrix Yq = quantize(Y, fxp.y);
  const Preprocessed prep =
      preprocess_gram(quantize(gram(Hq), fxp.g), N0, Es, config.preprocess, nullptr, recip);
  EqualizeOptions eq;
  eq.quantize_z = [&fxp](cplx v) { return quantize(v, fxp.z); };
  eq.quantize_r = [&fxp](cplx v) { return quantize(v, fxp.y_mf); };

  const double alpha = config.alpha.value_or(N0 / Es);
  const Eigen::Index U = H.cols();
  RVector mu(U), xi(U);
  int clamped = 0;
  for (Eigen::Index u = 0; u < U; ++u) {
    const double g = prep.G(u, u).real();
    mu[u] = g * lut(g + alpha);
    xi[u] = Es * (1.0 - mu[u]) * mu[u];
  }
  clamped = floor_xi(xi, Es);
  RVector xi_eff(U);
  for (Eigen::Index u = 0; u < U; ++u) xi_eff[u] = 1.0 / lut(xi[u]);

  std::vector<SoftOutput> out;
  out.reserve(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index t = 0; t < Y.cols(); ++t) {
    const CVector y_mf = quantize(CMatrix(matched_filter(Hq, Yq.col(t))), fxp.y_mf).col(0);
    EqualizerState st = gbcd_equalize(prep, y_mf, config.iterations, config.denoiser, eq);
    SoftOutput so;
    so.estimates = st.v_last;
    so.symbols = std::move(st.z);
    so.mu = mu;
    so.xi = xi;
    so.clamped_xi = clamped;
    so.llr = axis_llrs(so.estimates, mu, xi_eff, c)
                 .unaryExpr([&fxp](double l) { return quantize(l, fxp.llr); });
    out.push_back(std::move(so));
  }
  return out;
}

}  // namespace gbcd
