// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace gbcd {

CMatrix gram(const CMatrix& H, MulCounter* counter) {
  const Eigen::Index B = H.rows();
  const Eigen::Index U = H.cols();
  CMatrix G(U, U);
  for (Eigen::Index i = 0; i < U; ++i) {
    double diag = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) diag += std::norm(H(b, i));
    G(i, i) = diag;
    count(counter, 2 * B);
    for (Eigen::Index j = i + 1; j < U; ++j) {
      cplx acc{};
      for (Eigen::Index b = 0; b < B; ++b) acc += std::conj(H(b, i)) * H(b, j);
      G(i, j) = acc;
      G(j, i) = std::conj(acc);
      count(counter, 4 * B);
    }
  }
  return G;
}

CVector matched_filter(const CMatrix& H, const CVector& y, MulCounter* counter) {
  if (y.size() != H.rows()) throw InvalidArgument("matched_filter: dimension mismatch");
  const Eigen::Index B = H.rows();
  const Eigen::Index U = H.cols();
  CVector out(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    cplx acc{};
    for (Eigen::Index b = 0; b < B; ++b) acc += std::conj(H(b, u)) * y[b];
    out[u] = acc;
  }
  count(counter, 4 * B * U);
  return out;
}

RVector reciprocal_sinr(const CMatrix& G, double N0, double Es, MulCounter* counter,
                        const std::function<double(double)>& reciprocal) {
  const Eigen::Index U = G.rows();
  const double noise = N0 / Es;
  RVector out(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    const double guu = G(u, u).real();
    if (!(guu > 0.0))
      throw NumericalError("reciprocal_sinr: non-positive Gram diagonal at UE " +
                           std::to_string(u));
    double lambda = 0.0;
    for (Eigen::Index i = 0; i < U; ++i)
      if (i != u) lambda += std::norm(G(u, i));
    const double g = reciprocal ? reciprocal(guu) : 1.0 / guu;
    out[u] = g * (lambda * g + noise);
    count(counter, 2 * (U - 1) + 3);
  }
  return out;
}

std::vector<int> sort_ues(const RVector& inv_sinr) {
  const int U = static_cast<int>(inv_sinr.size());
  if (U > 0 && std::has_single_bit(static_cast<unsigned>(U))) return bitonic_argsort(inv_sinr);
  std::vector<int> idx(U);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return inv_sinr[a] < inv_sinr[b]; });
  return idx;
}

std::vector<int> bitonic_argsort(const RVector& values) {
  const std::size_t n = static_cast<std::size_t>(values.size());
  if (n == 0) return {};
  if (!std::has_single_bit(n)) throw InvalidArgument("bitonic_argsort: size must be a power of two");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](int a, int b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  };
  for (std::size_t k = 2; k <= n; k <<= 1) {
    for (std::size_t j = k >> 1; j > 0; j >>= 1) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i ^ j;
        if (l <= i) continue;
        const bool ascending = (i & k) == 0;
        if (ascending ? less(idx[l], idx[i]) : less(idx[i], idx[l])) std::swap(idx[i], idx[l]);
      }
    }
  }
  return idx;
}

namespace {

CMatrix gather_block(const CMatrix& G, const std::vector<int>& a) {
  const Eigen::Index L = static_cast<Eigen::Index>(a.size());
  CMatrix sub(L, L);
  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = 0; j < L; ++j) sub(i, j) = G(a[i], a[j]);
  return sub;
}

// Closed-form Hermitian 2x2 inverse; 8 real multiplications.
bool invert_2x2(const CMatrix& g, CMatrix& out, MulCounter* counter,
                const std::function<double(double)>& reciprocal) {
  const double g11 = g(0, 0).real();
  const double g22 = g(1, 1).real();
  const cplx g12 = g(0, 1);
  const double det = g11 * g22 - std::norm(g12);
  count(counter, 3);
  if (!(det > 1e-12 * std::abs(g11 * g22))) return false;
  const double d = reciprocal ? reciprocal(det) : 1.0 / det;
  count(counter, 1 + 2 + 2);
  out.resize(2, 2);
  out(0, 0) = g22 * d;
  out(1, 1) = g11 * d;
  out(0, 1) = -g12 * d;
  out(1, 0) = std::conj(out(0, 1));
  return true;
}

bool invert_dense(const CMatrix& g, CMatrix& out) {
  Eigen::PartialPivLU<CMatrix> lu(g);
  if (!(lu.rcond() > 1e-12)) return false;
  out = lu.inverse();
  return true;
}

}  // namespace

BlockInverses block_inverses(const CMatrix& G, const std::vector<std::vector<int>>& blocks,
                             MulCounter* counter,
                             const std::function<double(double)>& reciprocal) {
  BlockInverses result;
  result.inverses.reserve(blocks.size());
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    CMatrix sub = gather_block(G, blocks[m]);
    const Eigen::Index L = sub.rows();
    CMatrix inv;
    bool ok;
    if (L == 1) {
      ok = sub(0, 0).real() > 0.0;
      if (ok) {
        const double g = sub(0, 0).real();
        inv = CMatrix::Constant(1, 1, reciprocal ? reciprocal(g) : 1.0 / g);
      }
      count(counter, 1);
    } else if (L == 2) {
      ok = invert_2x2(sub, inv, counter, reciprocal);
    } else {
      ok = invert_dense(sub, inv);
    }
    if (!ok) {
      const double eps = 1e-6 * sub.diagonal().real().sum() / static_cast<double>(L);
      sub.diagonal().array() += eps;
      const bool fixed = L == 2 ? invert_2x2(sub, inv, nullptr, reciprocal) : invert_dense(sub, inv);
      if (!fixed) throw NumericalError("block_inverses: block " + std::to_string(m) + " is zero");
      result.regularized.push_back(static_cast<int>(m));
    }
    result.inverses.push_back(std::move(inv));
  }
  return result;
}

Preprocessed preprocess_gram(CMatrix G, double N0, double Es, const PreprocessOptions& options,
                             MulCounter* counter, const std::function<double(double)>& reciprocal) {
  const int U = static_cast<int>(G.rows());
  const int L = options.block_size;
  if (L < 1 || U % L != 0)
    throw InvalidArgument("block size " + std::to_string(L) + " does not divide U = " +
                          std::to_string(U));
  Preprocessed p;
  p.N0 = N0;
  p.Es = Es;
  p.block_size = L;
  p.inv_sinr = reciprocal_sinr(G, N0, Es, counter, reciprocal);
  if (options.sort) {
    p.order = sort_ues(p.inv_sinr);
  } else {
    p.order.resize(U);
    std::iota(p.order.begin(), p.order.end(), 0);
  }
  for (int m = 0; m < U / L; ++m)
    p.blocks.emplace_back(p.order.begin() + m * L, p.order.begin() + (m + 1) * L);
  BlockInverses inv = block_inverses(G, p.blocks, counter, reciprocal);
  p.block_inverse = std::move(inv.inverses);
  p.regularized_blocks = std::move(inv.regularized);
  p.G = std::move(G);
  return p;
}

Preprocessed preprocess(const CMatrix& H, double N0, double Es, const PreprocessOptions& options,
                        MulCounter* counter) {
  return preprocess_gram(gram(H, counter), N0, Es, options, counter);
}

DenoiserSchedule box_schedule(const Constellation& c) {
  return {{build_plm_table(PlmMode::Box, 1.0, 1.0, c)}};
}

DenoiserSchedule pme_schedule(const std::vector<double>& rho, const std::vector<double>& beta,
                              const Constellation& c) {
  if (rho.size() != beta.size() || rho.empty())
    throw InvalidArgument("pme_schedule: rho and beta must be non-empty and equally long");
  DenoiserSchedule s;
  for (std::size_t k = 0; k < rho.size(); ++k)
    s.tables.push_back(build_plm_table(PlmMode::Pme, rho[k], beta[k], c));
  return s;
}

EqualizerState gbcd_equalize(const Preprocessed& prep, const CVector& y_mf, int K,
                             const DenoiserSchedule& denoiser, const EqualizeOptions& options,
                             MulCounter* counter) {
  if (K < 1) throw InvalidArgument("gbcd_equalize: need at least one iteration");
  const Eigen::Index U = prep.G.rows();
  if (y_mf.size() != U) throw InvalidArgument("gbcd_equalize: y_mf has wrong length");
  if (denoiser.tables.size() != 1 && static_cast<int>(denoiser.tables.size()) < K)
    throw InvalidArgument("gbcd_equalize: denoiser schedule shorter than K");

  EqualizerState st;
  st.z = CVector::Zero(U);
  st.r = y_mf;
  st.v_last = CVector::Zero(U);
  const Eigen::Index L = prep.block_size;
  CVector r_a(L), v(L), dz(L);

  for (int k = 0; k < K; ++k) {
    const PlmTable& table = denoiser.at(k);
    for (std::size_t m = 0; m < prep.blocks.size(); ++m) {
      const std::vector<int>& a = prep.blocks[m];
      const CMatrix& kinv = prep.block_inverse[m];
      for (Eigen::Index i = 0; i < L; ++i) r_a[i] = st.r[a[i]];
      for (Eigen::Index i = 0; i < L; ++i) {
        cplx acc = st.z[a[i]];
        for (Eigen::Index j = 0; j < L; ++j) acc += kinv(i, j) * r_a[j];
        v[i] = acc;
      }
      count(counter, 4 * L * L);
      for (Eigen::Index i = 0; i < L; ++i) {
        cplx zn = table.apply(v[i]);
        if (options.quantize_z) zn = options.quantize_z(zn);
        dz[i] = zn - st.z[a[i]];
        st.z[a[i]] = zn;
        st.v_last[a[i]] = v[i];
      }
      for (Eigen::Index row = 0; row < U; ++row) {
        cplx acc{};
        for (Eigen::Index j = 0; j < L; ++j) acc += prep.G(row, a[j]) * dz[j];
        st.r[row] -= acc;
        if (options.quantize_r) st.r[row] = options.quantize_r(st.r[row]);
      }
      count(counter, 4 * U * L);
      if (options.trace != nullptr)
        options.trace->push_back({k + 1, static_cast<int>(m) + 1, st.r.norm(), st.z});
    }
    st.k = k + 1;
  }
  return st;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "iteration,block,residual_norm";
  const Eigen::Index U = trace.empty() ? 0 : trace.front().z.size();
  for (Eigen::Index u = 0; u < U; ++u) out << ",z" << u << "_re,z" << u << "_im";
  out << '\n';
  for (const TraceRow& row : trace) {
    out << row.iteration << ',' << row.block << ',' << row.residual_norm;
    for (Eigen::Index u = 0; u < U; ++u) out << ',' << row.z[u].real() << ',' << row.z[u].imag();
    out << '\n';
  }
}

std::vector<SoftOutput> gbcd_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                    const GbcdConfig& config, const Constellation& c) {
  const Preprocessed prep = preprocess(H, N0, Es, config.preprocess);
  const double alpha = config.alpha.value_or(N0 / Es);
  std::vector<SoftOutput> out;
  out.reserve(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index t = 0; t < Y.cols(); ++t) {
    const CVector y_mf = matched_filter(H, Y.col(t));
    EqualizerState st = gbcd_equalize(prep, y_mf, config.iterations, config.denoiser);
    SoftOutput so = compute_llrs(st.v_last, prep.G, Es, alpha, c);
    so.symbols = std::move(st.z);
    out.push_back(std::move(so));
  }
  return out;
}

}  // namespace gbcd
