// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/baselines.hpp"

#include <cmath>
#include <string>

#include "gbcd/detector.hpp"

namespace gbcd {

CholeskyFactor cholesky(const CMatrix& A, MulCounter* counter) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw InvalidArgument("cholesky: matrix must be square");
  CholeskyFactor f;
  f.L = CMatrix::Zero(n, n);
  CMatrix& L = f.L;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = A(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(L(j, k));
    count(counter, 2 * j);
    if (!(d > 0.0))
      throw NumericalError("cholesky: matrix is not positive definite (pivot " +
                           std::to_string(j) + ")");
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      cplx acc = A(i, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= L(i, k) * std::conj(L(j, k));
      L(i, j) = acc / ljj;
      count(counter, 4 * j + 2);
    }
  }
  return f;
}

CVector forward_substitute(const CholeskyFactor& f, const CVector& b, MulCounter* counter) {
  const Eigen::Index n = f.L.rows();
  CVector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc = b[i];
    for (Eigen::Index k = 0; k < i; ++k) acc -= f.L(i, k) * w[k];
    w[i] = acc / f.L(i, i).real();
    count(counter, 4 * i + 2);
  }
  return w;
}

CVector backward_substitute(const CholeskyFactor& f, const CVector& w, MulCounter* counter) {
  const Eigen::Index n = f.L.rows();
  CVector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    cplx acc = w[i];
    for (Eigen::Index k = i + 1; k < n; ++k) acc -= std::conj(f.L(k, i)) * x[k];
    x[i] = acc / f.L(i, i).real();
    count(counter, 4 * (n - 1 - i) + 2);
  }
  return x;
}

LmmsePreprocessed lmmse_preprocess(const CMatrix& H, double N0, double Es, MulCounter* counter) {
  LmmsePreprocessed p;
  p.N0 = N0;
  p.Es = Es;
  p.G = gram(H, counter);
  CMatrix A = p.G;
  A.diagonal().array() += N0 / Es;
  p.chol = cholesky(A, counter);

  // mu_u = [A^-1 G]_uu = 1 - (N0/Es) [A^-1]_uu.
  const Eigen::Index U = p.G.rows();
  p.mu.resize(U);
  p.xi.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    CVector e = CVector::Zero(U);
    e[u] = 1.0;
    const CVector col = backward_substitute(p.chol, forward_substitute(p.chol, e));
    p.mu[u] = 1.0 - (N0 / Es) * col[u].real();
    p.xi[u] = Es * (1.0 - p.mu[u]) * p.mu[u];
  }
  p.clamped_xi = floor_xi(p.xi, Es);
  return p;
}

CVector lmmse_equalize(const LmmsePreprocessed& prep, const CVector& y_mf, MulCounter* counter) {
  return backward_substitute(prep.chol, forward_substitute(prep.chol, y_mf, counter), counter);
}

std::vector<SoftOutput> lmmse_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es,
                                     const Constellation& c) {
  const LmmsePreprocessed prep = lmmse_preprocess(H, N0, Es);
  std::vector<SoftOutput> out;
  out.reserve(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index t = 0; t < Y.cols(); ++t) {
    SoftOutput so;
    so.estimates = lmmse_equalize(prep, matched_filter(H, Y.col(t)));
    so.symbols = so.estimates;
    so.mu = prep.mu;
    so.xi = prep.xi;
    so.clamped_xi = prep.clamped_xi;
    so.llr = axis_llrs(so.estimates, so.mu, so.xi, c);
    out.push_back(std::move(so));
  }
  return out;
}

OcdPreprocessed ocd_preprocess(const CMatrix& H, double N0, double Es, MulCounter* counter) {
  OcdPreprocessed p;
  p.N0 = N0;
  p.Es = Es;
  const Eigen::Index U = H.cols();
  p.norm2.resize(U);
  p.inv_norm2.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    const double n2 = H.col(u).squaredNorm();
    if (!(n2 > 0.0)) throw NumericalError("ocd: zero-norm channel column " + std::to_string(u));
    p.norm2[u] = n2;
    p.inv_norm2[u] = 1.0 / n2;
  }
  count(counter, static_cast<std::uint64_t>(U * (2 * H.rows() + 1)));
  return p;
}

OcdState ocd_equalize(const CMatrix& H, const OcdPreprocessed& prep, const CVector& y, int K,
                      const Constellation& c, const OcdOptions& options, MulCounter* counter) {
  if (K < 1) throw InvalidArgument("ocd_equalize: need at least one iteration");
  if (y.size() != H.rows()) throw InvalidArgument("ocd_equalize: dimension mismatch");
  const Eigen::Index B = H.rows();
  const Eigen::Index U = H.cols();
  OcdState st;
  st.z = CVector::Zero(U);
  st.v_last = CVector::Zero(U);
  st.r = y;
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index u = 0; u < U; ++u) {
      cplx corr{};
      for (Eigen::Index b = 0; b < B; ++b) corr += std::conj(H(b, u)) * st.r[b];
      const cplx v = st.z[u] + prep.inv_norm2[u] * corr;
      const cplx zn = box_denoise(v, c);
      const cplx dz = zn - st.z[u];
      for (Eigen::Index b = 0; b < B; ++b) st.r[b] -= H(b, u) * dz;
      count(counter, static_cast<std::uint64_t>(8 * B + 2));
      st.z[u] = zn;
      st.v_last[u] = v;
      if (options.objective != nullptr) options.objective->push_back(st.r.squaredNorm());
    }
  }
  return st;
}

std::vector<SoftOutput> ocd_detect(const CMatrix& H, const CMatrix& Y, double N0, double Es, int K,
                                   const Constellation& c) {
  const OcdPreprocessed prep = ocd_preprocess(H, N0, Es);
  const LlrParams lp = llr_params(prep.norm2, N0 / Es, Es);
  std::vector<SoftOutput> out;
  out.reserve(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index t = 0; t < Y.cols(); ++t) {
    OcdState st = ocd_equalize(H, prep, Y.col(t), K, c);
    SoftOutput so;
    so.estimates = st.v_last;
    so.symbols = st.z;
    so.mu = lp.mu;
    so.xi = lp.xi;
    so.clamped_xi = lp.clamped;
    so.llr = axis_llrs(so.estimates, so.mu, so.xi, c);
    out.push_back(std::move(so));
  }
  return out;
}

}  // namespace gbcd
