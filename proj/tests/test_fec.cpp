// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gbcd/fec.hpp"
#include "gbcd/rng.hpp"
#include "gbcd/types.hpp"

using namespace gbcd;

namespace {

// Direct convolution: output_g[i] = xor_d tap_g(d) u[i - d], tap d = bit (6 - d).
std::vector<std::uint8_t> reference_convolve(const std::vector<std::uint8_t>& u) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (unsigned g : {kGenerator0, kGenerator1}) {
      unsigned acc = 0;
      for (int d = 0; d <= kMemory && static_cast<std::size_t>(d) <= i; ++d)
        acc ^= ((g >> (kMemory - d)) & 1u) & u[i - d];
      out.push_back(static_cast<std::uint8_t>(acc));
    }
  return out;
}

std::vector<std::uint8_t> random_bits(std::size_t n, Philox& rng) {
  std::vector<std::uint8_t> b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(2));
  return b;
}

}  // namespace

TEST_CASE("impulse response is the generator taps") {
  std::vector<std::uint8_t> u(10, 0);
  u[0] = 1;
  const auto out = convolve(u);
  const std::uint8_t a[] = {1, 0, 1, 1, 0, 1, 1}, b[] = {1, 1, 1, 1, 0, 0, 1};
  for (int i = 0; i < 7; ++i) {
    CHECK(out[2 * i] == a[i]);
    CHECK(out[2 * i + 1] == b[i]);
  }
  for (std::size_t i = 14; i < out.size(); ++i) CHECK(out[i] == 0);
}

TEST_CASE("encoder matches direct convolution") {
  Philox rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = random_bits(1 + rng.below(200), rng);
    CHECK(convolve(u) == reference_convolve(u));
  }
}

TEST_CASE("puncturing keeps the pattern and depuncturing inverts it") {
  Philox rng(2);
  for (CodeRate r : {CodeRate::Half, CodeRate::ThreeQuarters, CodeRate::FiveSixths}) {
    const PuncturePattern p = puncture_pattern(r);
    CHECK(static_cast<double>(p.period) / p.kept_per_period() == doctest::Approx(rate_value(r)));
    const std::size_t n = static_cast<std::size_t>(p.period) * 12;
    const auto mother = convolve(random_bits(n, rng));
    const auto kept = puncture(mother, r);
    CHECK(kept.size() == static_cast<std::size_t>(p.kept_per_period()) * 12);
    std::vector<double> soft(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) soft[i] = kept[i] ? -1.0 : 1.0;
    const auto back = depuncture(soft, r, n);
    REQUIRE(back.size() == 2 * n);
    for (std::size_t i = 0; i < 2 * n; ++i)
      if (back[i] != 0.0) CHECK((back[i] < 0) == (mother[i] == 1));
  }
  CHECK(parse_code_rate("3/4") == CodeRate::ThreeQuarters);
  CHECK_THROWS_AS(parse_code_rate("2/3"), InvalidArgument);
  CHECK_THROWS_AS(make_code_config(CodeRate::ThreeQuarters, 10, 0), InvalidArgument);
}

TEST_CASE("viterbi is maximum likelihood on small blocks") {
  // Max-log Viterbi maximizes sum (1 - 2 c_i) llr_i over codewords; compare
  // with exhaustive search over every payload.
  Philox rng(3);
  const std::pair<CodeRate, std::size_t> cases[] = {
      {CodeRate::Half, 24}, {CodeRate::ThreeQuarters, 16}, {CodeRate::FiveSixths, 18}};
  for (auto [rate, coded] : cases) {
    const CodeConfig cfg = make_code_config(rate, coded, 0);
    const std::size_t k = cfg.payload_bits();
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> llr(coded);
      for (auto& l : llr) l = rng.normal() * 2.0;
      double best = -1e300;
      std::vector<std::uint8_t> best_payload;
      for (std::uint64_t m = 0; m < (1ull << k); ++m) {
        std::vector<std::uint8_t> p(k);
        for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<std::uint8_t>((m >> i) & 1);
        const auto c = encode(p, cfg);
        double metric = 0;
        for (std::size_t i = 0; i < coded; ++i) metric += (1 - 2 * c[i]) * llr[i];
        if (metric > best) {
          best = metric;
          best_payload = p;
        }
      }
      CHECK(decode(llr, cfg).bits == best_payload);
    }
  }
}

TEST_CASE("interleaver is a permutation with an exact inverse") {
  Philox rng(4);
  const auto perm = interleaver_permutation(480, 99);
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(480);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  CHECK(perm != iota);
  CHECK(interleaver_permutation(480, 99) == perm);
  const auto bits = random_bits(480, rng);
  const auto mixed = interleave(bits, 99);
  std::vector<double> soft(mixed.begin(), mixed.end());
  const auto back = deinterleave_llrs(soft, 99);
  for (std::size_t i = 0; i < bits.size(); ++i) CHECK(back[i] == bits[i]);
}

TEST_CASE("decode rejects wrong lengths and flips the detector sign") {
  const CodeConfig cfg = make_code_config(CodeRate::Half, 240, 0);
  std::vector<double> short_llr(100, 1.0);
  CHECK_THROWS_AS(decode(short_llr, cfg), InvalidArgument);
  std::vector<double> det{1.5, -2.0};
  CHECK(to_decoder_llrs(det) == std::vector<double>{-1.5, 2.0});
  CHECK(encode(std::vector<std::uint8_t>(cfg.payload_bits(), 0), cfg).size() == 240);
  CHECK_THROWS_AS(encode(std::vector<std::uint8_t>(3, 0), cfg), InvalidArgument);
}
