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

/// Two's complement integer with `frac_bits` fraction bits, `width` bits wide.
struct FixedValue {
  std::int64_t value = 0;
  bool saturated = false;
};

/// Hidden bit + mantissa from the payload, shifted by the code's exponent.
/// Mantissa width is payload_len - 1 (payload = sign then mantissa). A
/// DirectValue code with bits 0 decodes to 0. Right shifts round to nearest
/// even; overflow saturates.
FixedValue pair_to_fixed(const CodingPair& pair, const FloatFormat& base, std::span<const Mapping> code_map,
                         int frac_bits, unsigned width = 32);

struct FixedPair {
  CodingPair pair;
  bool saturated = false;
};

/// Leading-one normalization, then the mantissa is rounded to the payload
/// width of the selected code. Zero needs a DirectValue{0} code.
FixedPair fixed_to_pair(std::int64_t value, int frac_bits, const FloatFormat& base, const ProbabilityModel& model);

}  // namespace cpc
