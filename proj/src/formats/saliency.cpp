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

#include "cpc/formats/saliency.hpp"

namespace cpc {

CodingPair saliency_pair(double value, bool important, const DualExponentMap& map) {
  try {
    return float_to_pair(value, map.format(important), important ? map.salient : map.ordinary).pair;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Alphabet) throw;
    throw Error(ErrorKind::Mapping, std::string(important ? "salient " : "ordinary ") + "exponent has no code");
  }
}

SalientValue pair_to_salient(const CodingPair& pair, const FloatFormat& base, std::span<const Mapping> code_map) {
  const Exponent e = exponent_of(code_map, pair.code);
  const unsigned sign_bits = base.has_sign ? 1 : 0;
  if (pair.payload_len < sign_bits) throw Error(ErrorKind::Contract, "payload lacks a sign bit");
  FloatFormat f = base;
  f.mant_bits = static_cast<std::uint8_t>(pair.payload_len - sign_bits);
  return {pair_to_float(pair, f, code_map), e.salient};
}

}  // namespace cpc
