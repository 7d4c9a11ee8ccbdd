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

namespace cpc {

/// A numeric value split into an entropy-coded code and raw payload bits.
/// Only the low `payload_len` bits of `payload` are significant; the rest
/// must be zero.
struct CodingPair {
  std::uint32_t code = 0;
  std::uint32_t payload = 0;
  std::uint8_t payload_len = 0;

  friend bool operator==(const CodingPair&, const CodingPair&) = default;
};

constexpr std::uint32_t low_mask(unsigned bits) {
  return bits >= 32 ? 0xFFFFFFFFu : (std::uint32_t{1} << bits) - 1u;
}

constexpr bool payload_is_clean(const CodingPair& p) {
  return p.payload_len <= 32 && (p.payload & ~low_mask(p.payload_len)) == 0;
}

}  // namespace cpc
