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

#include "cpc/formats/fixed_point.hpp"

#include <bit>
#include <string>
#include <tuple>

namespace cpc {

namespace {

// Round-to-nearest-even of v / 2^shift.
std::uint64_t shift_right_rne(std::uint64_t v, unsigned shift) {
  if (shift == 0) return v;
  if (shift >= 64) return 0;
  const std::uint64_t kept = v >> shift;
  const std::uint64_t rem = v & ((std::uint64_t{1} << shift) - 1);
  const std::uint64_t half = std::uint64_t{1} << (shift - 1);
  return kept + ((rem > half || (rem == half && (kept & 1u))) ? 1 : 0);
}

}  // namespace

FixedValue pair_to_fixed(const CodingPair& pair, const FloatFormat& base, std::span<const Mapping> code_map,
                         int frac_bits, unsigned width) {
  if (width < 2 || width > 63) throw Error(ErrorKind::Contract, "fixed-point width must be 2..63 bits");
  if (pair.code >= code_map.size())
    throw Error(ErrorKind::Alphabet, "code " + std::to_string(pair.code) + " not in model");
  if (auto* d = std::get_if<DirectValue>(&code_map[pair.code]); d && d->bits == 0) return {0, false};

  const Exponent e = exponent_of(code_map, pair.code);
  if (pair.payload_len < 1) throw Error(ErrorKind::Contract, "payload lacks a sign bit");
  const unsigned mb = pair.payload_len - 1u;
  const bool negative = (pair.payload >> mb) & 1u;
  const std::uint64_t mant = pair.payload & low_mask(mb);
  std::uint64_t m;
  int unbiased;
  if (e.value == 0) {
    m = mant;
    unbiased = 1 - base.exp_bias;
  } else {
    m = (std::uint64_t{1} << mb) | mant;
    unbiased = e.value - base.exp_bias;
  }

  const int shift = unbiased - static_cast<int>(mb) + frac_bits;
  const std::uint64_t limit = (std::uint64_t{1} << (width - 1)) - (negative ? 0 : 1);
  std::uint64_t mag;
  bool saturated = false;
  if (shift >= 0) {
    if (m != 0 && (shift >= 64 || static_cast<unsigned>(std::bit_width(m)) + static_cast<unsigned>(shift) > width)) {
      mag = limit;
      saturated = true;
    } else {
      mag = m << shift;
    }
  } else {
    mag = shift_right_rne(m, static_cast<unsigned>(-shift));
  }
  if (mag > limit) {
    mag = limit;
    saturated = true;
  }
  const auto v = static_cast<std::int64_t>(mag);
  return {negative ? -v : v, saturated};
}

FixedPair fixed_to_pair(std::int64_t value, int frac_bits, const FloatFormat& base, const ProbabilityModel& model) {
  if (value == 0) {
    for (std::size_t i = 0; i < model.size(); ++i)
      if (auto* d = std::get_if<DirectValue>(&model[i].mapping); d && d->bits == 0)
        return {{static_cast<std::uint32_t>(i), 0, 0}, false};
    throw Error(ErrorKind::Mapping, "zero has no code");
  }
  if (value <= -(std::int64_t{1} << 62) || value >= (std::int64_t{1} << 62))
    throw Error(ErrorKind::Contract, "fixed-point value too wide");

  const ExponentMap exps = ExponentMap::from_model(model, 0, static_cast<int>(base.max_exp_field()));
  const std::uint32_t sign = value < 0 ? 1u : 0u;
  const auto a = static_cast<std::uint64_t>(value < 0 ? -value : value);
  const int lead = std::bit_width(a) - 1;
  int field = lead - frac_bits + base.exp_bias;
  if (field < 1 || field >= static_cast<int>(base.max_exp_field()))
    throw Error(ErrorKind::Mapping, "exponent " + std::to_string(field) + " outside the normal range");

  auto pick = [&](int f) {
    auto code = exps.find(f);
    if (!code) throw Error(ErrorKind::Mapping, "exponent " + std::to_string(f) + " has no code");
    const unsigned pb = model[*code].payload_bits;
    if (pb < 1) throw Error(ErrorKind::Model, "exponent code lacks a sign bit");
    return std::pair{*code, pb - 1};
  };

  auto [code, mb] = pick(field);
  std::uint64_t kept;  // significand with the leading one, mb + 1 bits
  if (static_cast<unsigned>(lead) >= mb) {
    kept = shift_right_rne(a, static_cast<unsigned>(lead) - mb);
  } else {
    kept = a << (mb - static_cast<unsigned>(lead));
  }

  bool saturated = false;
  if (kept == (std::uint64_t{2} << mb)) {
    // Rounding carried into the next exponent.
    const auto next = exps.find(field + 1);
    if (next && field + 1 < static_cast<int>(base.max_exp_field())) {
      std::tie(code, mb) = pick(field + 1);
      kept = 0;
    } else {
      kept = low_mask(mb);
      saturated = true;
    }
  } else {
    kept &= low_mask(mb);
  }
  return {{code, (sign << mb) | static_cast<std::uint32_t>(kept), static_cast<std::uint8_t>(mb + 1)}, saturated};
}

}  // namespace cpc
