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

#include "cpc/formats/float.hpp"

#include <cmath>
#include <string>

namespace cpc {

void validate(const FloatFormat& fmt) {
  if (fmt.exp_bits < 1 || fmt.exp_bits > 8 || fmt.mant_bits > 23 || fmt.total_bits() > 32)
    throw Error(ErrorKind::Contract, "unsupported float layout");
}

ExponentMap::ExponentMap(int lo, int hi) : lo_(lo), codes_(static_cast<std::size_t>(hi - lo + 1), -1) {
  if (hi < lo) throw Error(ErrorKind::Contract, "empty exponent range");
}

ExponentMap ExponentMap::identity(int lo, int hi) {
  ExponentMap m(lo, hi);
  for (int e = lo; e <= hi; ++e) m.set(e, static_cast<std::uint32_t>(e - lo));
  return m;
}

ExponentMap ExponentMap::from_model(const ProbabilityModel& model, int lo, int hi, bool salient) {
  ExponentMap m(lo, hi);
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto* e = std::get_if<Exponent>(&model[i].mapping);
    if (e && e->salient == salient) m.set(e->value, static_cast<std::uint32_t>(i));
  }
  return m;
}

void ExponentMap::set(int exponent, std::uint32_t code) {
  if (exponent < lo_ || exponent > hi()) throw Error(ErrorKind::Contract, "exponent outside map range");
  codes_[static_cast<std::size_t>(exponent - lo_)] = static_cast<std::int32_t>(code);
}

std::uint32_t ExponentMap::at(int exponent) const {
  auto c = find(exponent);
  if (!c) throw Error(ErrorKind::Alphabet, "exponent " + std::to_string(exponent) + " has no code");
  return *c;
}

Exponent exponent_of(std::span<const Mapping> code_map, std::uint32_t code) {
  if (code >= code_map.size()) throw Error(ErrorKind::Alphabet, "code " + std::to_string(code) + " not in model");
  auto* e = std::get_if<Exponent>(&code_map[code]);
  if (!e) throw Error(ErrorKind::Mapping, "code " + std::to_string(code) + " carries no exponent");
  return *e;
}

CodingPair pattern_to_pair(std::uint32_t pattern, const FloatFormat& fmt, const ExponentMap& exp_to_code) {
  const unsigned m = fmt.mant_bits;
  const auto exp = static_cast<int>((pattern >> m) & low_mask(fmt.exp_bits));
  const std::uint32_t sign = fmt.has_sign ? (pattern >> (m + fmt.exp_bits)) & 1u : 0u;
  CodingPair p;
  p.code = exp_to_code.at(exp);
  p.payload_len = static_cast<std::uint8_t>(fmt.payload_bits());
  p.payload = (sign << m) | (pattern & low_mask(m));
  return p;
}

std::uint32_t pair_to_pattern(const CodingPair& pair, const FloatFormat& fmt, std::span<const Mapping> code_map) {
  if (pair.payload_len != fmt.payload_bits()) throw Error(ErrorKind::Contract, "payload width does not match format");
  const Exponent e = exponent_of(code_map, pair.code);
  if (e.value < 0 || static_cast<std::uint32_t>(e.value) > fmt.max_exp_field())
    throw Error(ErrorKind::Mapping, "exponent outside format range");
  const unsigned m = fmt.mant_bits;
  const std::uint32_t sign = fmt.has_sign ? (pair.payload >> m) & 1u : 0u;
  return (sign << (m + fmt.exp_bits)) | (static_cast<std::uint32_t>(e.value) << m) | (pair.payload & low_mask(m));
}

CodingPair bf16_to_pair(std::uint16_t bits, const ExponentMap& exp_to_code) {
  return pattern_to_pair(bits, FloatFormat::bf16(), exp_to_code);
}

std::uint16_t pair_to_bf16(const CodingPair& pair, std::span<const Mapping> code_map) {
  return static_cast<std::uint16_t>(pair_to_pattern(pair, FloatFormat::bf16(), code_map));
}

RoundedFloat round_to_format(double value, const FloatFormat& fmt) {
  if (!std::isfinite(value)) throw Error(ErrorKind::Contract, "cannot round a non-finite value");
  const bool negative = std::signbit(value);
  if (negative && !fmt.has_sign) throw Error(ErrorKind::Contract, "negative value for unsigned format");

  const int m = fmt.mant_bits;
  const std::uint32_t sign_bit = negative ? std::uint32_t{1} << (m + fmt.exp_bits) : 0u;
  const double a = std::fabs(value);
  if (a == 0.0) return {sign_bit, false};

  int e2 = 0;
  std::frexp(a, &e2);
  const int unbiased = e2 - 1;  // a in [2^unbiased, 2^(unbiased+1))
  int field = unbiased + fmt.exp_bias;
  std::uint64_t mant = 0;
  if (field >= 1) {
    auto r = static_cast<std::uint64_t>(std::nearbyint(std::ldexp(a, m - unbiased)));
    if (r == (std::uint64_t{2} << m)) {
      ++field;
      r = std::uint64_t{1} << m;
    }
    mant = r - (std::uint64_t{1} << m);
  } else {
    auto r = static_cast<std::uint64_t>(std::nearbyint(std::ldexp(a, m - (1 - fmt.exp_bias))));
    if (r == (std::uint64_t{1} << m)) {
      field = 1;
      mant = 0;
    } else {
      field = 0;
      mant = r;
    }
  }

  bool saturated = false;
  const auto max_finite = static_cast<int>(fmt.max_exp_field()) - 1;
  if (field > max_finite) {
    field = max_finite;
    mant = low_mask(static_cast<unsigned>(m));
    saturated = true;
  }
  return {sign_bit | (static_cast<std::uint32_t>(field) << m) | static_cast<std::uint32_t>(mant), saturated};
}

double format_value(std::uint32_t pattern, const FloatFormat& fmt) {
  const int m = fmt.mant_bits;
  const auto field = (pattern >> m) & low_mask(fmt.exp_bits);
  const std::uint32_t mant = pattern & low_mask(static_cast<unsigned>(m));
  const bool negative = fmt.has_sign && ((pattern >> (m + fmt.exp_bits)) & 1u);
  double v;
  if (field == fmt.max_exp_field()) {
    v = mant ? std::nan("") : INFINITY;
  } else if (field == 0) {
    v = std::ldexp(static_cast<double>(mant), 1 - fmt.exp_bias - m);
  } else {
    v = std::ldexp(static_cast<double>((std::uint64_t{1} << m) | mant), static_cast<int>(field) - fmt.exp_bias - m);
  }
  return negative ? -v : v;
}

FloatPair float_to_pair(double value, const FloatFormat& fmt, const ExponentMap& exp_to_code) {
  auto rounded = round_to_format(value, fmt);
  const unsigned m = fmt.mant_bits;
  const auto field = static_cast<int>((rounded.pattern >> m) & low_mask(fmt.exp_bits));
  if (exp_to_code.find(field)) return {pattern_to_pair(rounded.pattern, fmt, exp_to_code), rounded.saturated};

  // Rounding may have carried out of a mapped exponent.
  const double a = std::fabs(value);
  int e2 = 0;
  std::frexp(a, &e2);
  const int original = a == 0.0 ? 0 : std::max(e2 - 1 + fmt.exp_bias, 0);
  if (original + 1 == field && exp_to_code.find(original)) {
    const std::uint32_t sign = rounded.pattern & ~low_mask(m + fmt.exp_bits);
    const std::uint32_t pattern = sign | (static_cast<std::uint32_t>(original) << m) | low_mask(m);
    return {pattern_to_pair(pattern, fmt, exp_to_code), true};
  }
  throw Error(ErrorKind::Alphabet, "exponent " + std::to_string(field) + " has no code");
}

double pair_to_float(const CodingPair& pair, const FloatFormat& fmt, std::span<const Mapping> code_map) {
  return format_value(pair_to_pattern(pair, fmt, code_map), fmt);
}

}  // namespace cpc
