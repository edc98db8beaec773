// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/fec.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "gbcd/rng.hpp"
#include "gbcd/types.hpp"

namespace gbcd {

CodeRate parse_code_rate(const std::string& s) {
  if (s == "1/2") return CodeRate::Half;
  if (s == "3/4") return CodeRate::ThreeQuarters;
  if (s == "5/6") return CodeRate::FiveSixths;
  throw InvalidArgument("unsupported code rate '" + s + "'");
}

std::string to_string(CodeRate r) {
  switch (r) {
    case CodeRate::Half: return "1/2";
    case CodeRate::ThreeQuarters: return "3/4";
    case CodeRate::FiveSixths: return "5/6";
  }
  return "?";
}

double rate_value(CodeRate r) {
  switch (r) {
    case CodeRate::Half: return 0.5;
    case CodeRate::ThreeQuarters: return 0.75;
    case CodeRate::FiveSixths: return 5.0 / 6.0;
  }
  return 0.0;
}

PuncturePattern puncture_pattern(CodeRate r) {
  switch (r) {
    case CodeRate::Half: return {1, {1}, {1}};
    case CodeRate::ThreeQuarters: return {3, {1, 1, 0}, {1, 0, 1}};
    case CodeRate::FiveSixths: return {5, {1, 1, 0, 1, 0}, {1, 0, 1, 0, 1}};
  }
  return {};
}

int PuncturePattern::kept_per_period() const {
  return std::accumulate(keep0.begin(), keep0.end(), 0) +
         std::accumulate(keep1.begin(), keep1.end(), 0);
}

std::size_t CodeConfig::input_bits() const {
  const PuncturePattern p = puncture_pattern(rate);
  return coded_bits / p.kept_per_period() * p.period;
}

std::size_t CodeConfig::payload_bits() const { return input_bits() - kMemory; }

CodeConfig make_code_config(CodeRate rate, std::size_t coded_bits, std::uint64_t seed) {
  const PuncturePattern p = puncture_pattern(rate);
  if (coded_bits == 0 || coded_bits % p.kept_per_period() != 0)
    throw InvalidArgument("coded block length " + std::to_string(coded_bits) +
                          " is not a multiple of the puncturing period at rate " +
                          to_string(rate));
  CodeConfig cfg{rate, seed, coded_bits};
  if (cfg.input_bits() <= static_cast<std::size_t>(kMemory))
    throw InvalidArgument("coded block too short for tail termination");
  return cfg;
}

namespace {

inline std::uint8_t parity(unsigned x) { return static_cast<std::uint8_t>(std::popcount(x) & 1); }

// Register layout: bit 6 holds the current input, bits 5..0 the previous six
// inputs (most recent in bit 5). Generator MSB taps the current input.
inline void branch_outputs(unsigned state, unsigned input, std::uint8_t& a, std::uint8_t& b) {
  const unsigned reg = (input << kMemory) | state;
  a = parity(reg & kGenerator0);
  b = parity(reg & kGenerator1);
}

inline unsigned next_state(unsigned state, unsigned input) {
  return ((input << kMemory) | state) >> 1;
}

}  // namespace

std::vector<std::uint8_t> convolve(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size() * 2);
  unsigned state = 0;
  for (std::uint8_t bit : bits) {
    std::uint8_t a, b;
    branch_outputs(state, bit & 1u, a, b);
    out.push_back(a);
    out.push_back(b);
    state = next_state(state, bit & 1u);
  }
  return out;
}

std::vector<std::uint8_t> puncture(std::span<const std::uint8_t> mother, CodeRate rate) {
  const PuncturePattern p = puncture_pattern(rate);
  const std::size_t n = mother.size() / 2;
  std::vector<std::uint8_t> out;
  out.reserve(mother.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i % p.period;
    if (p.keep0[j]) out.push_back(mother[2 * i]);
    if (p.keep1[j]) out.push_back(mother[2 * i + 1]);
  }
  return out;
}

std::vector<double> depuncture(std::span<const double> llrs, CodeRate rate,
                               std::size_t input_bits) {
  const PuncturePattern p = puncture_pattern(rate);
  std::vector<double> out(2 * input_bits, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < input_bits; ++i) {
    const std::size_t j = i % p.period;
    if (p.keep0[j]) {
      if (k >= llrs.size()) throw InvalidArgument("depuncture: too few LLRs");
      out[2 * i] = llrs[k++];
    }
    if (p.keep1[j]) {
      if (k >= llrs.size()) throw InvalidArgument("depuncture: too few LLRs");
      out[2 * i + 1] = llrs[k++];
    }
  }
  if (k != llrs.size()) throw InvalidArgument("depuncture: LLR count mismatch");
  return out;
}

std::vector<std::uint8_t> encode(std::span<const std::uint8_t> payload, const CodeConfig& cfg) {
  if (payload.size() != cfg.payload_bits())
    throw InvalidArgument("encode: payload length " + std::to_string(payload.size()) +
                          " != " + std::to_string(cfg.payload_bits()));
  std::vector<std::uint8_t> input(payload.begin(), payload.end());
  input.resize(cfg.input_bits(), 0);
  return puncture(convolve(input), cfg.rate);
}

std::vector<std::uint8_t> viterbi_decode(std::span<const double> llrs, bool terminated) {
  const std::size_t n = llrs.size() / 2;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<double> metric(kStates, kNegInf), next(kStates);
  metric[0] = 0.0;
  // Survivor decision per (step, next state): the dropped register bit.
  std::vector<std::uint8_t> decision(n * kStates);

  // Precompute branch outputs for all (state, input).
  std::uint8_t out_a[kStates][2], out_b[kStates][2];
  for (unsigned s = 0; s < kStates; ++s)
    for (unsigned u = 0; u < 2; ++u) branch_outputs(s, u, out_a[s][u], out_b[s][u]);

  for (std::size_t i = 0; i < n; ++i) {
    const double la = llrs[2 * i];
    const double lb = llrs[2 * i + 1];
    std::fill(next.begin(), next.end(), kNegInf);
    for (unsigned s = 0; s < kStates; ++s) {
      if (metric[s] == kNegInf) continue;
      for (unsigned u = 0; u < 2; ++u) {
        const double bm = (out_a[s][u] ? -la : la) + (out_b[s][u] ? -lb : lb);
        const unsigned ns = next_state(s, u);
        const double cand = metric[s] + bm;
        // Ties keep the predecessor with the lower dropped bit.
        if (cand > next[ns]) {
          next[ns] = cand;
          decision[i * kStates + ns] = static_cast<std::uint8_t>(s & 1u);
        }
      }
    }
    metric.swap(next);
  }

  unsigned state = 0;
  if (!terminated) {
    state = static_cast<unsigned>(std::max_element(metric.begin(), metric.end()) - metric.begin());
  }
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = n; i-- > 0;) {
    // The input that led into `state` is its top register bit.
    bits[i] = static_cast<std::uint8_t>((state >> (kMemory - 1)) & 1u);
    const unsigned dropped = decision[i * kStates + state];
    state = ((state << 1) & (kStates - 1)) | dropped;
  }
  return bits;
}

DecodeResult decode(std::span<const double> llrs, const CodeConfig& cfg,
                    std::span<const std::uint8_t> truth) {
  if (llrs.size() != cfg.coded_bits)
    throw InvalidArgument("decode: LLR count does not match the block length");
  const std::vector<double> mother = depuncture(llrs, cfg.rate, cfg.input_bits());
  std::vector<std::uint8_t> bits = viterbi_decode(mother, true);
  bits.resize(cfg.payload_bits());
  DecodeResult r;
  r.block_ok = !truth.empty() && truth.size() == bits.size() &&
               std::equal(bits.begin(), bits.end(), truth.begin());
  r.bits = std::move(bits);
  return r;
}

std::vector<std::size_t> interleaver_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Philox rng(seed, 0x1EAFull);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<std::uint8_t> interleave(std::span<const std::uint8_t> bits, std::uint64_t seed) {
  const auto perm = interleaver_permutation(bits.size(), seed);
  std::vector<std::uint8_t> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits[perm[i]];
  return out;
}

std::vector<double> deinterleave_llrs(std::span<const double> llrs, std::uint64_t seed) {
  const auto perm = interleaver_permutation(llrs.size(), seed);
  std::vector<double> out(llrs.size());
  for (std::size_t i = 0; i < llrs.size(); ++i) out[perm[i]] = llrs[i];
  return out;
}

std::vector<double> to_decoder_llrs(std::span<const double> detector_llrs) {
  std::vector<double> out(detector_llrs.size());
  std::transform(detector_llrs.begin(), detector_llrs.end(), out.begin(),
                 [](double l) { return -l; });
  return out;
}

}  // namespace gbcd
