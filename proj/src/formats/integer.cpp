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

#include "cpc/formats/integer.hpp"

#include <bit>
#include <string>

#include "cpc/error.hpp"

namespace cpc {

unsigned int_payload_bits(unsigned k, std::optional<unsigned> max_payload) {
  if (max_payload && k > *max_payload) return *max_payload;
  return k;
}

CodingPair int_to_pair(std::int64_t v, std::optional<unsigned> max_payload) {
  if (max_payload && (*max_payload < 1 || *max_payload > 32))
    throw Error(ErrorKind::Contract, "payload cap must be 1..32 bits");
  const std::uint64_t a = v < 0 ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v);
  if (a >= (std::uint64_t{1} << 31))
    throw Error(ErrorKind::Contract, "integer magnitude " + std::to_string(a) + " too large");
  if (a == 0) return {0, 0, 0};

  const std::uint32_t sign = v < 0 ? 1u : 0u;
  auto k = static_cast<unsigned>(std::bit_width(a));
  const std::uint64_t low = a & low_mask(k - 1);
  if (!max_payload || k <= *max_payload)
    return {k, static_cast<std::uint32_t>((std::uint64_t{sign} << (k - 1)) | low), static_cast<std::uint8_t>(k)};

  // Round the full significand (leading one included) to b bits.
  const unsigned b = *max_payload;
  const unsigned drop = k - b;
  std::uint64_t full = a >> drop;
  const std::uint64_t rem = a & low_mask(drop);
  const std::uint64_t half = std::uint64_t{1} << (drop - 1);
  if (rem > half || (rem == half && (full & 1u))) ++full;
  if (full == (std::uint64_t{1} << b)) {
    ++k;
    full >>= 1;
  }
  const std::uint64_t kept = full & low_mask(b - 1);
  return {k, static_cast<std::uint32_t>((std::uint64_t{sign} << (b - 1)) | kept), static_cast<std::uint8_t>(b)};
}

std::int64_t pair_to_int(const CodingPair& pair) {
  const unsigned k = pair.code;
  if (k >= kIntCodes) throw Error(ErrorKind::Alphabet, "integer class " + std::to_string(k) + " out of range");
  if (k == 0) {
    if (pair.payload_len != 0) throw Error(ErrorKind::Contract, "zero carries a payload");
    return 0;
  }
  const unsigned len = pair.payload_len;
  if (len < 1 || len > k) throw Error(ErrorKind::Contract, "payload width does not fit integer class");
  const bool negative = (pair.payload >> (len - 1)) & 1u;
  const std::uint64_t kept = pair.payload & low_mask(len - 1);
  const auto mag = static_cast<std::int64_t>((std::uint64_t{1} << (k - 1)) | (kept << (k - len)));
  return negative ? -mag : mag;
}

}  // namespace cpc
