// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gbcd {

/// Punctured rates of the K = 7, [133, 171] (octal) convolutional code.
enum class CodeRate { Half, ThreeQuarters, FiveSixths };

CodeRate parse_code_rate(const std::string& s);
std::string to_string(CodeRate r);
double rate_value(CodeRate r);

inline constexpr int kConstraintLength = 7;
inline constexpr int kMemory = kConstraintLength - 1;
inline constexpr int kStates = 1 << kMemory;
inline constexpr unsigned kGenerator0 = 0133;
inline constexpr unsigned kGenerator1 = 0171;

/// Keep-masks over one puncturing period, rows for generator 0 and 1.
struct PuncturePattern {
  int period = 1;
  std::vector<std::uint8_t> keep0;
  std::vector<std::uint8_t> keep1;
  int kept_per_period() const;
};
PuncturePattern puncture_pattern(CodeRate r);

struct CodeConfig {
  CodeRate rate = CodeRate::Half;
  std::uint64_t interleaver_seed = 0;
  /// Coded bits per block (N_d * log2(Q)).
  std::size_t coded_bits = 0;

  /// Encoder input bits including the kMemory tail zeros.
  std::size_t input_bits() const;
  /// Information bits per block (input_bits() - kMemory).
  std::size_t payload_bits() const;
};

/// Validates that `coded_bits` is realizable at `rate` with tail termination.
CodeConfig make_code_config(CodeRate rate, std::size_t coded_bits, std::uint64_t interleaver_seed);

/// Rate-1/2 mother encoder from the zero state, no tail; output A0 B0 A1 B1 ...
std::vector<std::uint8_t> convolve(std::span<const std::uint8_t> bits);

std::vector<std::uint8_t> puncture(std::span<const std::uint8_t> mother, CodeRate rate);
/// Re-inserts zero LLRs at punctured positions; `input_bits` is the encoder input length.
std::vector<double> depuncture(std::span<const double> llrs, CodeRate rate, std::size_t input_bits);

/// Appends the tail, encodes and punctures. Output length is cfg.coded_bits.
std::vector<std::uint8_t> encode(std::span<const std::uint8_t> payload, const CodeConfig& cfg);

/// Max-log soft Viterbi over the 64-state trellis on mother-code LLRs
/// (two per input bit, punctured positions 0). Decoder convention: a positive
/// LLR favours bit 0. With `terminated`, the path is forced to end in state 0.
std::vector<std::uint8_t> viterbi_decode(std::span<const double> mother_llrs, bool terminated);

struct DecodeResult {
  std::vector<std::uint8_t> bits;  ///< payload bits
  bool block_ok = false;           ///< decoded == truth (false when no truth given)
};

/// Decodes cfg.coded_bits decoder-convention LLRs (already deinterleaved).
DecodeResult decode(std::span<const double> llrs, const CodeConfig& cfg,
                    std::span<const std::uint8_t> truth = {});

std::vector<std::size_t> interleaver_permutation(std::size_t n, std::uint64_t seed);
/// out[i] = bits[perm[i]].
std::vector<std::uint8_t> interleave(std::span<const std::uint8_t> bits, std::uint64_t seed);
/// Inverse of interleave() applied to soft values.
std::vector<double> deinterleave_llrs(std::span<const double> llrs, std::uint64_t seed);

/// Detector LLRs are positive when bit 1 is more likely; the decoder expects
/// the opposite sign.
std::vector<double> to_decoder_llrs(std::span<const double> detector_llrs);

}  // namespace gbcd
