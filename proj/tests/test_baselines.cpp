// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gbcd/baselines.hpp"
#include "gbcd/channel.hpp"
#include "gbcd/detector.hpp"
#include "gbcd/rng.hpp"

using namespace gbcd;

TEST_CASE("cholesky factor and substitutions") {
  Philox rng(31);
  for (int U : {1, 2, 4, 7, 16}) {
    const CMatrix H = gen_channel(2 * U + 3, U, {}, rng).H;
    const CMatrix A = gram(H) + 0.1 * CMatrix::Identity(U, U);
    MulCounter mc;
    const CholeskyFactor f = cholesky(A, &mc);
    CHECK((f.L * f.L.adjoint() - A).norm() < 1e-10 * A.norm());
    CHECK(mc.real_mults == static_cast<std::uint64_t>((2 * U * U * U - 2 * U) / 3));
    for (int i = 0; i < U; ++i) {
      CHECK(f.L(i, i).real() > 0.0);
      CHECK(f.L(i, i).imag() == 0.0);
    }
    CVector b(U);
    for (auto& x : b) x = rng.complex_normal(1.0);
    MulCounter ms;
    const CVector x = backward_substitute(f, forward_substitute(f, b, &ms), &ms);
    CHECK((A * x - b).norm() < 1e-9 * b.norm());
    CHECK(ms.real_mults == static_cast<std::uint64_t>(4 * U * U));
  }
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(cholesky(bad), NumericalError);
}

TEST_CASE("lmmse matches the dense formula") {
  Philox rng(32);
  const Constellation c = make_constellation(16);
  for (int t = 0; t < 20; ++t) {
    const CMatrix H = gen_channel(16, 8, {}, rng).H;
    const TransmissionBatch tx = transmit(H, c, 1, 10.0, rng);
    const LmmsePreprocessed p = lmmse_preprocess(H, tx.N0, 1.0);
    const CMatrix A = H.adjoint() * H + tx.N0 * CMatrix::Identity(8, 8);
    const CMatrix Ainv = A.inverse();
    const CVector ymf = H.adjoint() * tx.Y.col(0);
    const CVector s = lmmse_equalize(p, ymf);
    CHECK((s - Ainv * ymf).norm() < 1e-9 * s.norm());
    const CMatrix gain = Ainv * H.adjoint() * H;
    for (int u = 0; u < 8; ++u) {
      CHECK(p.mu[u] > 0.0);
      CHECK(p.mu[u] < 1.0);
      CHECK(p.mu[u] == doctest::Approx(gain(u, u).real()).epsilon(1e-9));
      CHECK(p.xi[u] == doctest::Approx(p.mu[u] * (1 - p.mu[u])).epsilon(1e-9));
    }
    // Orthogonality principle: the error y_mf - G s is proportional to s.
    CHECK((ymf - p.G * s - tx.N0 * s).norm() < 1e-9 * ymf.norm());
  }
}

TEST_CASE("optimized coordinate descent") {
  Philox rng(33);
  const Constellation c = make_constellation(16);
  const CMatrix H = gen_channel(16, 6, {}, rng).H;
  const TransmissionBatch tx = transmit(H, c, 1, 8.0, rng);
  MulCounter pre, eq;
  const OcdPreprocessed p = ocd_preprocess(H, tx.N0, 1.0, &pre);
  CHECK(pre.real_mults == 6u * (2 * 16 + 1));
  std::vector<double> obj;
  OcdOptions o;
  o.objective = &obj;
  const OcdState st = ocd_equalize(H, p, tx.Y.col(0), 3, c, o, &eq);
  CHECK(eq.real_mults == 3u * 6 * (8 * 16 + 2));
  CHECK(obj.size() == 18u);
  for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] + 1e-12);
  CHECK((st.r - (tx.Y.col(0) - H * st.z)).norm() < 1e-10);
  CMatrix Z = H;
  Z.col(2).setZero();
  CHECK_THROWS_AS(ocd_preprocess(Z, 0.1, 1.0), NumericalError);
}
