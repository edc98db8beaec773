// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gbcd {

cplx box_denoise(cplx v, const Constellation& c) {
  const double a = c.max_amplitude();
  return {std::clamp(v.real(), -a, a), std::clamp(v.imag(), -a, a)};
}

std::vector<double> integer_pam(int order) {
  const int m = static_cast<int>(std::lround(std::sqrt(order)));
  std::vector<double> pam(m);
  for (int i = 0; i < m; ++i) pam[i] = 2 * i - (m - 1);
  return pam;
}

double pme_exact(double v, double omega, double beta, std::span<const double> pam) {
  double max_exp = -std::numeric_limits<double>::infinity();
  for (double a : pam) max_exp = std::max(max_exp, -omega * (v - beta * a) * (v - beta * a));
  double num = 0.0, den = 0.0;
  for (double a : pam) {
    const double w = std::exp(-omega * (v - beta * a) * (v - beta * a) - max_exp);
    num += a * w;
    den += w;
  }
  return num / den;
}

namespace {

inline double clip1(double x) { return std::max(std::min(x, 1.0), -1.0); }

int pme_half_terms(int order) {
  return static_cast<int>(std::lround(std::sqrt(order))) / 2 - 1;
}

}  // namespace

double pme_piecewise(double v, double rho, double beta, int order) {
  const int g = pme_half_terms(order);
  double out = 0.0;
  for (int k = -g; k <= g; ++k) out += clip1(rho * (v + 2.0 * beta * k));
  return out;
}

std::string to_string(PlmMode m) {
  switch (m) {
    case PlmMode::Box: return "box";
    case PlmMode::Pme: return "pme";
    case PlmMode::LlrDistance: return "llr";
  }
  return "?";
}

PlmTable::PlmTable(PlmMode mode, std::vector<double> boundaries, std::vector<double> slopes,
                   std::vector<double> biases)
    : mode_(mode),
      boundaries_(std::move(boundaries)),
      slopes_(std::move(slopes)),
      biases_(std::move(biases)) {
  if (slopes_.size() != boundaries_.size() + 1 || biases_.size() != slopes_.size())
    throw InvalidArgument("PlmTable: need bins = boundaries + 1 slopes and biases");
  for (std::size_t i = 1; i < boundaries_.size(); ++i)
    if (!(boundaries_[i] > boundaries_[i - 1]))
      throw InvalidArgument("PlmTable: boundaries must be strictly increasing");
}

std::size_t PlmTable::bin_index(double x) const {
  return static_cast<std::size_t>(std::upper_bound(boundaries_.begin(), boundaries_.end(), x) -
                                  boundaries_.begin());
}

double PlmTable::max_discontinuity() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    const double x = boundaries_[i];
    const double left = slopes_[i] * x + biases_[i];
    const double right = slopes_[i + 1] * x + biases_[i + 1];
    worst = std::max(worst, std::abs(left - right));
  }
  return worst;
}

std::string PlmTable::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "plm " << to_string(mode_) << ' ' << bins() << '\n';
  auto row = [&os](const char* name, const std::vector<double>& v) {
    os << name;
    for (double x : v) os << ' ' << x;
    os << '\n';
  };
  row("boundaries", boundaries_);
  row("slopes", slopes_);
  row("biases", biases_);
  return os.str();
}

PlmTable PlmTable::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string tag, mode_name;
  std::size_t bins = 0;
  if (!(is >> tag >> mode_name >> bins) || tag != "plm" || bins == 0)
    throw InvalidArgument("PlmTable::from_text: bad header");
  PlmMode mode;
  if (mode_name == "box") mode = PlmMode::Box;
  else if (mode_name == "pme") mode = PlmMode::Pme;
  else if (mode_name == "llr") mode = PlmMode::LlrDistance;
  else throw InvalidArgument("PlmTable::from_text: unknown mode " + mode_name);
  auto read_row = [&is](const char* name, std::size_t n) {
    std::string label;
    if (!(is >> label) || label != name)
      throw InvalidArgument(std::string("PlmTable::from_text: expected ") + name);
    std::vector<double> v(n);
    for (double& x : v)
      if (!(is >> x)) throw InvalidArgument("PlmTable::from_text: truncated row");
    return v;
  };
  auto b = read_row("boundaries", bins - 1);
  auto s = read_row("slopes", bins);
  auto c = read_row("biases", bins);
  return PlmTable(mode, std::move(b), std::move(s), std::move(c));
}

namespace {

// Sorted kink list with exact and near-exact duplicates merged.
std::vector<double> merge_kinks(std::vector<double> kinks, double scale) {
  std::sort(kinks.begin(), kinks.end());
  std::vector<double> out;
  for (double k : kinks)
    if (out.empty() || k - out.back() > 1e-13 * scale) out.push_back(k);
  return out;
}

// Representative point strictly inside bin i.
double bin_probe(const std::vector<double>& b, std::size_t i) {
  if (b.empty()) return 0.0;
  if (i == 0) return b.front() - 1.0;
  if (i == b.size()) return b.back() + 1.0;
  return 0.5 * (b[i - 1] + b[i]);
}

}  // namespace

PlmTable build_plm_table(PlmMode mode, double rho, double beta, const Constellation& c) {
  if (mode == PlmMode::Box) {
    const double a = c.max_amplitude();
    return PlmTable(PlmMode::Box, {-a, a}, {0.0, 1.0, 0.0}, {-a, 0.0, a});
  }
  if (mode != PlmMode::Pme)
    throw InvalidArgument("build_plm_table: use build_llr_tables for LLR tables");
  if (!(rho > 0.0) || !(beta > 0.0))
    throw InvalidArgument("build_plm_table: rho and beta must be positive");

  const int g = pme_half_terms(c.order);
  const double s = c.scale;
  std::vector<double> kinks;
  for (int k = -g; k <= g; ++k) {
    kinks.push_back(s * (-2.0 * beta * k - 1.0 / rho));
    kinks.push_back(s * (-2.0 * beta * k + 1.0 / rho));
  }
  std::vector<double> bounds = merge_kinks(std::move(kinks), s * (2.0 * beta * (g + 1) + 1.0 / rho));

  std::vector<double> slopes, biases;
  for (std::size_t i = 0; i <= bounds.size(); ++i) {
    const double t = bin_probe(bounds, i) / s;
    int linear = 0;
    double offset = 0.0;
    for (int k = -g; k <= g; ++k) {
      const double pre = rho * (t + 2.0 * beta * k);
      if (pre >= 1.0) offset += 1.0;
      else if (pre <= -1.0) offset -= 1.0;
      else {
        ++linear;
        offset += rho * 2.0 * beta * k;
      }
    }
    // s * (rho * linear * x / s + offset)
    slopes.push_back(rho * linear);
    biases.push_back(s * offset);
  }
  return PlmTable(PlmMode::Pme, std::move(bounds), std::move(slopes), std::move(biases));
}

std::vector<PlmTable> build_llr_tables(const Constellation& c) {
  std::vector<PlmTable> tables;
  for (int b = 0; b < c.bits_per_axis; ++b) {
    std::vector<double> subset[2];
    for (int i = 0; i < c.pam_size; ++i) subset[c.pam_bit(i, b)].push_back(c.pam[i]);
    std::vector<double> kinks;
    for (const auto& sub : subset)
      for (std::size_t i = 1; i < sub.size(); ++i) kinks.push_back(0.5 * (sub[i - 1] + sub[i]));
    std::vector<double> bounds = merge_kinks(std::move(kinks), 1.0);

    auto nearest_in = [](const std::vector<double>& sub, double t) {
      double best = sub.front();
      for (double p : sub)
        if (std::abs(t - p) < std::abs(t - best)) best = p;
      return best;
    };
    std::vector<double> slopes, biases;
    for (std::size_t i = 0; i <= bounds.size(); ++i) {
      const double t = bin_probe(bounds, i);
      const double p0 = nearest_in(subset[0], t);
      const double p1 = nearest_in(subset[1], t);
      // (t - p0)^2 - (t - p1)^2 = 2 (p1 - p0) t + p0^2 - p1^2
      slopes.push_back(2.0 * (p1 - p0));
      biases.push_back(p0 * p0 - p1 * p1);
    }
    tables.emplace_back(PlmMode::LlrDistance, std::move(bounds), std::move(slopes),
                        std::move(biases));
  }
  return tables;
}

int floor_xi(RVector& xi, double Es) {
  const double floor = kXiFloorRelative * Es;
  int clamped = 0;
  for (Eigen::Index u = 0; u < xi.size(); ++u) {
    if (!(xi[u] >= floor)) {
      xi[u] = floor;
      ++clamped;
    }
  }
  return clamped;
}

LlrParams llr_params(const RVector& gram_diagonal, double alpha, double Es) {
  LlrParams p;
  p.alpha = alpha;
  const Eigen::Index U = gram_diagonal.size();
  p.mu.resize(U);
  p.xi.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    const double g = gram_diagonal[u];
    p.mu[u] = g / (g + alpha);
    p.xi[u] = Es * (1.0 - p.mu[u]) * p.mu[u];
  }
  p.clamped = floor_xi(p.xi, Es);
  return p;
}

RMatrix axis_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                  const Constellation& c) {
  const Eigen::Index U = s_hat.size();
  RMatrix llr(U, c.bits_per_symbol);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (Eigen::Index u = 0; u < U; ++u) {
    const double axis[2] = {s_hat[u].real(), s_hat[u].imag()};
    for (int ax = 0; ax < 2; ++ax) {
      for (int b = 0; b < c.bits_per_axis; ++b) {
        double best[2] = {kInf, kInf};
        for (int i = 0; i < c.pam_size; ++i) {
          const double d = axis[ax] - mu[u] * c.pam[i];
          double& slot = best[c.pam_bit(i, b)];
          slot = std::min(slot, d * d);
        }
        llr(u, ax * c.bits_per_axis + b) = (best[0] - best[1]) / xi[u];
      }
    }
  }
  return llr;
}

RMatrix exhaustive_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                        const Constellation& c) {
  const Eigen::Index U = s_hat.size();
  RMatrix llr(U, c.bits_per_symbol);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (Eigen::Index u = 0; u < U; ++u) {
    for (int b = 0; b < c.bits_per_symbol; ++b) {
      double best[2] = {kInf, kInf};
      for (int v = 0; v < 2; ++v)
        for (int p : c.bit_subsets[b][v])
          best[v] = std::min(best[v], std::norm(s_hat[u] - mu[u] * c.points[p]));
      llr(u, b) = (best[0] - best[1]) / xi[u];
    }
  }
  return llr;
}

RMatrix table_llrs(const CVector& s_hat, const RVector& mu, const RVector& xi,
                   const Constellation& c, const std::vector<PlmTable>& tables) {
  const Eigen::Index U = s_hat.size();
  RMatrix llr(U, c.bits_per_symbol);
  for (Eigen::Index u = 0; u < U; ++u) {
    const double gain = mu[u] * mu[u] / xi[u];
    const double axis[2] = {s_hat[u].real() / mu[u], s_hat[u].imag() / mu[u]};
    for (int ax = 0; ax < 2; ++ax)
      for (int b = 0; b < c.bits_per_axis; ++b)
        llr(u, ax * c.bits_per_axis + b) = gain * tables[b](axis[ax]);
  }
  return llr;
}

SoftOutput compute_llrs(const CVector& s_hat, const CMatrix& G, double Es, double alpha,
                        const Constellation& c) {
  const LlrParams p = llr_params(G.diagonal().real(), alpha, Es);
  SoftOutput out;
  out.estimates = s_hat;
  out.symbols = s_hat;
  out.mu = p.mu;
  out.xi = p.xi;
  out.clamped_xi = p.clamped;
  out.llr = axis_llrs(s_hat, p.mu, p.xi, c);
  return out;
}

double llr_to_prob(double llr) { return 0.5 * (1.0 + std::tanh(0.5 * llr)); }

std::vector<int> hard_symbols(const RMatrix& llr, const Constellation& c) {
  std::vector<int> out(static_cast<std::size_t>(llr.rows()));
  std::vector<std::uint8_t> bits(c.bits_per_symbol);
  for (Eigen::Index u = 0; u < llr.rows(); ++u) {
    for (int b = 0; b < c.bits_per_symbol; ++b) bits[b] = llr(u, b) > 0.0 ? 1 : 0;
    out[u] = c.map(bits);
  }
  return out;
}

PmeFit fit_pme_omega(double rho, double beta, int order, double half_width) {
  const std::vector<double> pam = integer_pam(order);
  if (half_width <= 0.0) half_width = 1.5 * (pam.back()) * beta;
  constexpr int kGrid = 2001;
  auto sq_gap = [&](double log_omega) {
    const double omega = std::exp(log_omega);
    double acc = 0.0;
    for (int i = 0; i < kGrid; ++i) {
      const double t = -half_width + 2.0 * half_width * i / (kGrid - 1);
      const double d = pme_exact(t, omega, beta, pam) - pme_piecewise(t, rho, beta, order);
      acc += d * d;
    }
    return acc / kGrid;
  };
  // Golden-section search on log(omega).
  double lo = std::log(1e-3), hi = std::log(1e4);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = sq_gap(x1), f2 = sq_gap(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - phi * (hi - lo); f1 = sq_gap(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + phi * (hi - lo); f2 = sq_gap(x2);
    }
  }
  PmeFit fit;
  fit.omega = std::exp(0.5 * (lo + hi));
  fit.rms_gap = std::sqrt(sq_gap(std::log(fit.omega)));
  for (int i = 0; i < kGrid; ++i) {
    const double t = -half_width + 2.0 * half_width * i / (kGrid - 1);
    fit.sup_gap = std::max(fit.sup_gap, std::abs(pme_exact(t, fit.omega, beta, pam) -
                                                 pme_piecewise(t, rho, beta, order)));
  }
  return fit;
}

}  // namespace gbcd
