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

#include "cpc/coding_pair.hpp"

namespace cpc {

/// Codes 0..32: k = bit width of |v|.
inline constexpr std::uint32_t kIntCodes = 33;

/// Payload width of magnitude class k. With `max_payload` set, classes wider
/// than the cap keep only the sign and the top max_payload-1 bits below the
/// leading one.
unsigned int_payload_bits(unsigned k, std::optional<unsigned> max_payload = std::nullopt);

/// NZ-MSB split: code k = bit_width(|v|), payload = sign then the k-1 bits
/// below the leading one. Zero is code 0 with an empty payload. Capped
/// payloads round to nearest even; a carry moves the value to class k+1.
/// |v| must be below 2^31.
CodingPair int_to_pair(std::int64_t v, std::optional<unsigned> max_payload = std::nullopt);

/// Inverse of int_to_pair. Truncated payloads are rescaled by the gap
/// between k and the payload width.
std::int64_t pair_to_int(const CodingPair& pair);

}  // namespace cpc
