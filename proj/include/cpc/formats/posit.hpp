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

#include "cpc/coding_pair.hpp"
#include "cpc/formats/float.hpp"
#include "cpc/model.hpp"

namespace cpc {

struct PositFormat {
  std::uint8_t n = 16;
  std::uint8_t es = 1;
  friend bool operator==(const PositFormat&, const PositFormat&) = default;
};

void validate(const PositFormat& fmt);

/// Largest scale k*2^es + e of a finite posit; the smallest is its negation.
int posit_max_scale(const PositFormat& fmt);
/// Fraction bits left after the regime and exponent of `scale`.
unsigned posit_fraction_bits(int scale, const PositFormat& fmt);

struct PositFields {
  bool negative = false;
  int scale = 0;
  std::uint32_t fraction = 0;
  std::uint8_t fraction_bits = 0;
  friend bool operator==(const PositFields&, const PositFields&) = default;
};

/// Fields of a regular posit; nullopt for zero and NaR.
std::optional<PositFields> posit_fields(std::uint32_t pattern, const PositFormat& fmt);
std::uint32_t posit_pattern(const PositFields& fields, const PositFormat& fmt);
/// Value of a pattern; NaR decodes as NaN.
double posit_value(std::uint32_t pattern, const PositFormat& fmt);

inline std::uint32_t posit_nar(const PositFormat& fmt) { return std::uint32_t{1} << (fmt.n - 1); }

/// Codes for the posit alphabet: one per scale, plus dedicated codes for the
/// two special patterns.
struct PositCodes {
  ExponentMap scale_to_code;
  std::optional<std::uint32_t> zero_code;
  std::optional<std::uint32_t> nar_code;

  static PositCodes from_model(const ProbabilityModel& model, const PositFormat& fmt);
};

/// Code from the scale, payload = sign followed by the fraction bits. Zero
/// and NaR are DirectValue codes with an empty payload.
CodingPair posit_to_pair(std::uint32_t pattern, const PositFormat& fmt, const PositCodes& codes);
std::uint32_t pair_to_posit(const CodingPair& pair, const PositFormat& fmt, std::span<const Mapping> code_map);
/// Value represented by a pair, computed without rebuilding the pattern.
double pair_posit_value(const CodingPair& pair, const PositFormat& fmt, std::span<const Mapping> code_map);

}  // namespace cpc
