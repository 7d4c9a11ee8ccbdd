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
#include <span>

#include "cpc/coding_pair.hpp"
#include "cpc/formats/float.hpp"
#include "cpc/model.hpp"

namespace cpc {

/// Two codes per exponent: an ordinary one and a salient one with a wider
/// mantissa. `base` supplies sign, exponent width and bias.
struct DualExponentMap {
  FloatFormat base;
  std::uint8_t ordinary_mant_bits = 2;
  std::uint8_t salient_mant_bits = 7;
  ExponentMap ordinary;
  ExponentMap salient;

  FloatFormat format(bool important) const {
    FloatFormat f = base;
    f.mant_bits = important ? salient_mant_bits : ordinary_mant_bits;
    return f;
  }
};

CodingPair saliency_pair(double value, bool important, const DualExponentMap& map);

struct SalientValue {
  double value = 0.0;
  bool important = false;
};

/// Mantissa width follows from the payload width.
SalientValue pair_to_salient(const CodingPair& pair, const FloatFormat& base, std::span<const Mapping> code_map);

}  // namespace cpc
