// Copyright 2026 The cpc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpc/coding_pair.hpp"
#include "cpc/model.hpp"

namespace cpc {

/// Sign / exponent / mantissa layout of a binary floating-point format.
/// Exponent field all-ones is reserved for inf/NaN when converting values;
/// the pattern-level adapters treat it as just another exponent.
struct FloatFormat {
  std::uint8_t exp_bits = 8;
  std::uint8_t mant_bits = 7;
  bool has_sign = true;
  std::int16_t exp_bias = 127;

  static constexpr FloatFormat bf16() { return {8, 7, true, 127}; }
  static constexpr FloatFormat fp32() { return {8, 23, true, 127}; }
  static constexpr FloatFormat fp16() { return {5, 10, true, 15}; }
  static constexpr FloatFormat e8m2() { return {8, 2, true, 127}; }
  static constexpr FloatFormat e8m3() { return {8, 3, true, 127}; }

  unsigned total_bits() const { return (has_sign ? 1u : 0u) + exp_bits + mant_bits; }
  unsigned payload_bits() const { return (has_sign ? 1u : 0u) + mant_bits; }
  std::uint32_t max_exp_field() const { return (std::uint32_t{1} << exp_bits) - 1; }

  friend bool operator==(const FloatFormat&, const FloatFormat&) = default;
};

void validate(const FloatFormat& fmt);

/// Dense exponent -> code table over [lo, hi].
class ExponentMap {
 public:
  ExponentMap() = default;
  ExponentMap(int lo, int hi);

  /// Every exponent maps to itself minus lo (the key space used before a
  /// model exists).
  static ExponentMap identity(int lo, int hi);
  /// Exponent codes of a model; `salient` selects the second code family.
  static ExponentMap from_model(const ProbabilityModel& model, int lo, int hi, bool salient = false);

  void set(int exponent, std::uint32_t code);
  std::optional<std::uint32_t> find(int exponent) const {
    if (exponent < lo_ || exponent > hi()) return std::nullopt;
    const std::int32_t c = codes_[static_cast<std::size_t>(exponent - lo_)];
    if (c < 0) return std::nullopt;
    return static_cast<std::uint32_t>(c);
  }
  std::uint32_t at(int exponent) const;

  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(codes_.size()) - 1; }

 private:
  int lo_ = 0;
  std::vector<std::int32_t> codes_;
};

/// Exponent carried by a code, or a mapping error.
Exponent exponent_of(std::span<const Mapping> code_map, std::uint32_t code);

CodingPair bf16_to_pair(std::uint16_t bits, const ExponentMap& exp_to_code);
std::uint16_t pair_to_bf16(const CodingPair& pair, std::span<const Mapping> code_map);

/// Field shuffle of a raw pattern: code from the exponent field, payload =
/// sign followed by the mantissa. Lossless for every pattern.
CodingPair pattern_to_pair(std::uint32_t pattern, const FloatFormat& fmt, const ExponentMap& exp_to_code);
std::uint32_t pair_to_pattern(const CodingPair& pair, const FloatFormat& fmt, std::span<const Mapping> code_map);

struct RoundedFloat {
  std::uint32_t pattern = 0;
  bool saturated = false;
};

/// Round-to-nearest-even conversion of a finite value; overflow saturates
/// to the largest finite magnitude.
RoundedFloat round_to_format(double value, const FloatFormat& fmt);
double format_value(std::uint32_t pattern, const FloatFormat& fmt);

struct FloatPair {
  CodingPair pair;
  bool saturated = false;
};

/// Rounds `value` to the format, then splits it. If rounding carries into an
/// exponent without a code, the result saturates to the largest magnitude of
/// the original exponent.
FloatPair float_to_pair(double value, const FloatFormat& fmt, const ExponentMap& exp_to_code);
double pair_to_float(const CodingPair& pair, const FloatFormat& fmt, std::span<const Mapping> code_map);

}  // namespace cpc
