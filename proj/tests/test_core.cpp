// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "gbcd/channel.hpp"
#include "gbcd/constellation.hpp"
#include "gbcd/rng.hpp"
#include "oracles.hpp"

using namespace gbcd;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) ==
        A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("philox streams are reproducible and distinct") {
  Philox a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs = differs || x != c();
  }
  CHECK(differs);
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("philox moments") {
  Philox rng(2026);
  constexpr int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sc = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double g = rng.normal();
    sn += g;
    sn2 += g * g;
    sc += std::norm(rng.complex_normal(2.0));
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sc / n == doctest::Approx(2.0).epsilon(0.02));
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 60000; ++i) ++hist[rng.below(6)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("constellation invariants") {
  for (int Q : {4, 16, 64, 256}) {
    CAPTURE(Q);
    const Constellation c = make_constellation(Q);
    CHECK(c.points.size() == static_cast<std::size_t>(Q));
    CHECK(c.energy() == doctest::Approx(1.0).epsilon(1e-12));
    cplx mean{};
    for (cplx p : c.points) mean += p;
    CHECK(std::abs(mean) < 1e-12);
    std::set<std::uint32_t> labels(c.labels.begin(), c.labels.end());
    CHECK(labels.size() == static_cast<std::size_t>(Q));
    // Gray: nearest horizontal and vertical neighbours differ in one bit.
    const double d = c.pam[1] - c.pam[0];
    for (int i = 0; i < Q; ++i)
      for (int j = 0; j < Q; ++j)
        if (std::abs(std::abs(c.points[i] - c.points[j]) - d) < 1e-9)
          CHECK(std::popcount(c.labels[i] ^ c.labels[j]) == 1);
    // Bit map round trip.
    std::vector<std::uint8_t> bits(c.bits_per_symbol);
    for (int i = 0; i < Q; ++i) {
      c.demap(i, bits);
      CHECK(c.map(bits) == i);
      CHECK(c.nearest(c.points[i] + cplx(0.2 * d, -0.2 * d)) == i);
    }
  }
  CHECK_THROWS_AS(make_constellation(8), InvalidArgument);
  CHECK_THROWS_AS(make_constellation(1024), InvalidArgument);
}

TEST_CASE("transmission model") {
  Philox rng(11);
  const Constellation c = make_constellation(16);
  const ChannelRealization ch = gen_channel(32, 8, {}, rng);
  const TransmissionBatch tx = transmit(ch.H, c, 50, 12.0, rng);
  CHECK((tx.Y - (ch.H * tx.S + tx.N)).norm() < 1e-12);
  CHECK(10 * std::log10(receive_snr(ch.H, 1.0, tx.N0)) == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(tx.N0 == doctest::Approx(ch.H.squaredNorm() / (32 * std::pow(10.0, 1.2))));
  for (int t = 0; t < tx.T; ++t)
    for (int u = 0; u < 8; ++u) CHECK(tx.S(u, t) == c.points[tx.symbols[t * 8 + u]]);
}

TEST_CASE("power control keeps receive powers within the window") {
  Philox rng(12);
  ChannelOptions opt;
  opt.power_spread_db = 20.0;
  for (int i = 0; i < 50; ++i) {
    ChannelRealization ch = gen_channel(16, 8, opt, rng);
    apply_power_control(ch, 3.0);
    double lo = 1e300, hi = -1e300;
    for (int u = 0; u < 8; ++u) {
      const double p = 10 * std::log10(ch.H.col(u).squaredNorm());
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    CHECK(hi - lo <= 6.0 + 1e-9);
  }
}

TEST_CASE("pure line-of-sight columns are unit-modulus steering vectors") {
  Philox rng(13);
  ChannelOptions opt;
  opt.condition = Condition::LoS;
  opt.los.k_factor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const ChannelRealization ch = gen_channel(16, 4, opt, rng);
    // Pure LoS: every column is a unit-modulus steering vector.
    for (int u = 0; u < 4; ++u)
      for (int b = 0; b < 16; ++b) CHECK(std::abs(ch.H(b, u)) == doctest::Approx(1.0));
  }
}

TEST_CASE("least-squares estimate error variance") {
  Philox rng(14);
  ChannelRealization ch;
  ch.H = CMatrix::Zero(64, 16);
  double acc = 0;
  for (int i = 0; i < 50; ++i) acc += estimate_channel(ch, 0.32, 1.0, rng).H.squaredNorm();
  CHECK(acc / (50 * 64 * 16) == doctest::Approx(0.32 / 16).epsilon(0.02));
}

TEST_CASE("matrix dump round trip") {
  Philox rng(15);
  const CMatrix m = gen_channel(5, 3, {}, rng).H;
  std::stringstream ss;
  write_matrix(ss, m);
  CHECK(ss.str().size() == 16 + 5 * 3 * 16);
  CHECK(ss.str().substr(0, 8) == "GBCDCMAT");
  CHECK(read_matrix(ss) == m);
  std::stringstream bad("GBCDXXXX");
  CHECK_THROWS(read_matrix(bad));
}

TEST_CASE("rayleigh gram condition number follows Marchenko-Pastur") {
  // Ratio U/B = 1/8: condition number of G tends to ((1+sqrt c)/(1-sqrt c))^2.
  const double s = std::sqrt(1.0 / 8.0);
  const double limit = std::pow((1 + s) / (1 - s), 2);
  std::vector<double> kappa;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Philox rng(derive_seed(16, {i}));
    const CMatrix G = oracle::naive_gram(gen_channel(128, 16, {}, rng).H);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(G);
    kappa.push_back(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff());
  }
  std::nth_element(kappa.begin(), kappa.begin() + 500, kappa.end());
  CHECK(kappa[500] == doctest::Approx(limit).epsilon(0.2));
}
