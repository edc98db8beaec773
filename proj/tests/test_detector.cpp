// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gbcd/baselines.hpp"
#include "gbcd/channel.hpp"
#include "gbcd/detector.hpp"
#include "gbcd/rng.hpp"
#include "oracles.hpp"

using namespace gbcd;

namespace {

CMatrix random_channel(int B, int U, std::uint64_t seed) {
  Philox rng(seed);
  return gen_channel(B, U, {}, rng).H;
}

}  // namespace

TEST_CASE("gram and matched filter against naive loops") {
  const CMatrix H = random_channel(13, 5, 1);
  Philox rng(2);
  CVector y(13);
  for (auto& v : y) v = rng.complex_normal(1.0);
  MulCounter cg, cm;
  const CMatrix G = gram(H, &cg);
  CHECK((G - oracle::naive_gram(H)).norm() < 1e-12);
  CHECK(G.isApprox(G.adjoint()));
  for (int u = 0; u < 5; ++u) CHECK(G(u, u).imag() == 0.0);
  CHECK(cg.real_mults == 5u * 2 * 13 + 10u * 4 * 13);
  CHECK((matched_filter(H, y, &cm) - H.adjoint() * y).norm() < 1e-12);
  CHECK(cm.real_mults == 4u * 13 * 5);
}

TEST_CASE("reciprocal sinr worked example") {
  CMatrix G(2, 2);
  G << 2.0, cplx(1.0, 1.0), cplx(1.0, -1.0), 4.0;
  // u=0: |G01|^2 / 4 + 0.2 / 2 = 0.5 + 0.1;  u=1: 2 / 16 + 0.2 / 4 = 0.175
  const RVector r = reciprocal_sinr(G, 0.2, 1.0);
  CHECK(r[0] == doctest::Approx(0.6));
  CHECK(r[1] == doctest::Approx(0.175));
  CHECK(sort_ues(r) == std::vector<int>{1, 0});
  G(1, 1) = 0.0;
  CHECK_THROWS_AS(reciprocal_sinr(G, 0.2, 1.0), NumericalError);
}

TEST_CASE("ordering is invariant to a common channel scale") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const CMatrix H = random_channel(16, 8, 100 + s);
    const double c = 0.37 + s * 0.1;
    const auto a = sort_ues(reciprocal_sinr(gram(H), 0.3, 1.0));
    const auto b = sort_ues(reciprocal_sinr(gram(H * c), 0.3 * c * c, 1.0));
    CHECK(a == b);
    CHECK(a == oracle::sinr_order(H, 0.3, 1.0, true));
  }
}

TEST_CASE("bitonic network equals stable sort") {
  Philox rng(3);
  for (int n : {1, 2, 4, 8, 16, 32}) {
    for (int t = 0; t < 20; ++t) {
      RVector v(n);
      for (int i = 0; i < n; ++i) v[i] = static_cast<double>(rng.below(5));  // many ties
      CHECK(bitonic_argsort(v) == sort_ues(v));
    }
  }
  CHECK_THROWS_AS(bitonic_argsort(RVector::Zero(6)), InvalidArgument);
}

TEST_CASE("block inverses") {
  CMatrix G(2, 2);
  G << 2.0, cplx(0, 1), cplx(0, -1), 2.0;
  MulCounter mc;
  const BlockInverses bi = block_inverses(G, {{0, 1}}, &mc);
  CMatrix expect(2, 2);
  expect << 2.0, cplx(0, -1), cplx(0, 1), 2.0;
  CHECK((bi.inverses[0] - expect / 3.0).norm() < 1e-14);
  CHECK(bi.regularized.empty());
  CHECK(mc.real_mults == 8u);

  // Adjugate oracle on random Hermitian blocks.
  for (std::uint64_t s = 0; s < 50; ++s) {
    const CMatrix Gr = gram(random_channel(8, 4, 200 + s));
    const BlockInverses r = block_inverses(Gr, {{0, 3}, {2, 1}});
    for (int m = 0; m < 2; ++m) {
      const std::vector<int> a = m == 0 ? std::vector<int>{0, 3} : std::vector<int>{2, 1};
      CMatrix blk(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) blk(i, j) = Gr(a[i], a[j]);
      CHECK((r.inverses[m] * blk - CMatrix::Identity(2, 2)).norm() < 1e-10);
    }
    const BlockInverses r4 = block_inverses(Gr, {{0, 1, 2, 3}});
    CHECK((r4.inverses[0] * Gr - CMatrix::Identity(4, 4)).norm() < 1e-9);
  }

  CMatrix S = CMatrix::Ones(2, 2);
  const BlockInverses sing = block_inverses(S, {{0, 1}});
  CHECK(sing.regularized == std::vector<int>{0});
  CHECK(sing.inverses[0].allFinite());
}

TEST_CASE("noiseless orthogonal channel is solved exactly") {
  const Constellation c = make_constellation(16);
  CMatrix H(8, 4);
  for (int b = 0; b < 8; ++b)
    for (int u = 0; u < 4; ++u) H(b, u) = std::polar(1.0, 2 * M_PI * b * u / 8.0);
  Philox rng(5);
  CVector s(4);
  for (auto& x : s) x = c.points[rng.below(16)];
  const Preprocessed prep = preprocess(H, 1e-3, 1.0);
  const EqualizerState st = gbcd_equalize(prep, matched_filter(H, H * s), 1, box_schedule(c));
  CHECK((st.z - s).norm() < 1e-12);
  CHECK_THROWS_AS(gbcd_equalize(prep, matched_filter(H, H * s), 0, box_schedule(c)),
                  InvalidArgument);
}

TEST_CASE("block count must divide the number of UEs") {
  const CMatrix H = random_channel(8, 5, 6);
  CHECK_THROWS_AS(preprocess(H, 0.1, 1.0), InvalidArgument);
  PreprocessOptions o;
  o.block_size = 1;
  CHECK_NOTHROW(preprocess(H, 0.1, 1.0, o));
}

TEST_CASE("gram-domain recursion equals receive-domain descent") {
  Philox rng(7);
  for (std::uint64_t i = 0; i < 120; ++i) {
    const int L = 1 + static_cast<int>(rng.below(2));
    const int U = L * (1 + static_cast<int>(rng.below(8 / L)));
    const int B = U + static_cast<int>(rng.below(17 - U));
    const int K = 1 + static_cast<int>(rng.below(4));
    const Constellation c = make_constellation(rng.below(2) ? 16 : 64);
    const CMatrix H = random_channel(B, U, 300 + i);
    const TransmissionBatch tx = transmit(H, c, 1, 15.0, rng);
    PreprocessOptions po;
    po.block_size = L;
    const Preprocessed prep = preprocess(H, tx.N0, 1.0, po);
    std::vector<TraceRow> trace;
    EqualizeOptions eo;
    eo.trace = &trace;
    const CVector ymf = matched_filter(H, tx.Y.col(0));
    const EqualizerState st = gbcd_equalize(prep, ymf, K, box_schedule(c), eo);
    const auto ref = oracle::direct_bcd(H, tx.Y.col(0), oracle::sinr_order(H, tx.N0, 1.0, true),
                                        L, K, [&](int, cplx v) { return box_denoise(v, c); });
    CHECK((st.z - ref.first).norm() <= 1e-9 * std::max(1.0, ref.first.norm()));
    CHECK((st.v_last - ref.second).norm() <= 1e-9 * std::max(1.0, ref.second.norm()));
    // Residual stays equal to y_mf - G z.
    CHECK((st.r - (ymf - prep.G * st.z)).norm() < 1e-9 * std::max(1.0, ymf.norm()));
    // One trace row per block per iteration; blocks partition the UEs.
    CHECK(trace.size() == static_cast<std::size_t>(K * U / L));
    std::multiset<int> seen;
    for (const auto& blk : prep.blocks) seen.insert(blk.begin(), blk.end());
    CHECK(seen.size() == static_cast<std::size_t>(U));
    CHECK(std::set<int>(seen.begin(), seen.end()).size() == static_cast<std::size_t>(U));
  }
}

TEST_CASE("scalar box descent never increases the objective") {
  const Constellation c = make_constellation(16);
  Philox rng(8);
  for (std::uint64_t i = 0; i < 30; ++i) {
    const CMatrix H = random_channel(16, 8, 400 + i);
    const TransmissionBatch tx = transmit(H, c, 1, 5.0, rng);
    PreprocessOptions po;
    po.block_size = 1;
    std::vector<TraceRow> trace;
    EqualizeOptions eo;
    eo.trace = &trace;
    gbcd_equalize(preprocess(H, tx.N0, 1.0, po), matched_filter(H, tx.Y.col(0)), 4,
                  box_schedule(c), eo);
    double prev = tx.Y.col(0).squaredNorm();
    for (const TraceRow& row : trace) {
      const double obj = (tx.Y.col(0) - H * row.z).squaredNorm();
      CHECK(obj <= prev + 1e-9);
      prev = obj;
    }
  }
}

TEST_CASE("unsorted scalar blocks reproduce optimized coordinate descent") {
  const Constellation c = make_constellation(64);
  Philox rng(9);
  for (std::uint64_t i = 0; i < 30; ++i) {
    const CMatrix H = random_channel(12, 6, 500 + i);
    const TransmissionBatch tx = transmit(H, c, 1, 18.0, rng);
    PreprocessOptions po;
    po.block_size = 1;
    po.sort = false;
    const EqualizerState g =
        gbcd_equalize(preprocess(H, tx.N0, 1.0, po), matched_filter(H, tx.Y.col(0)), 3,
                      box_schedule(c));
    const OcdState o = ocd_equalize(H, ocd_preprocess(H, tx.N0, 1.0), tx.Y.col(0), 3, c);
    CHECK((g.z - o.z).norm() < 1e-10);
    CHECK((g.v_last - o.v_last).norm() < 1e-10);
  }
}

TEST_CASE("trace csv layout") {
  std::vector<TraceRow> rows(1);
  rows[0].iteration = 1;
  rows[0].block = 0;
  rows[0].residual_norm = 0.5;
  rows[0].z = CVector::Constant(2, cplx(1, -1));
  std::ostringstream out;
  write_trace_csv(out, rows);
  const std::string s = out.str();
  CHECK(s.rfind("iteration,block,residual_norm,z0_re,z0_im,z1_re,z1_im\n", 0) == 0);
}
