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

namespace cpc {

/// Run of zeros closed by a nonzero weight. In binary mode the closing weight
/// is always 1 and carries no sign. A trailing run has no closing weight.
struct TernaryRun {
  std::uint64_t zero_run = 0;
  std::optional<std::int8_t> terminal_sign;  // +1 or -1, ternary mode only
  bool trailing = false;
  friend bool operator==(const TernaryRun&, const TernaryRun&) = default;
};

/// Run codes 0..32 are NZ-MSB classes of the run length; code 33 marks the
/// trailing run, whose length follows from the element count.
inline constexpr std::uint32_t kTrailingRunCode = 33;
inline constexpr std::uint32_t kRunCodes = 34;
inline constexpr std::size_t kGroupSize = 8;

/// Weights must lie in {-1, 0, 1}, or {0, 1} in binary mode.
std::vector<TernaryRun> ternary_to_runs(std::span<const std::int8_t> weights, bool binary);
std::vector<std::int8_t> runs_to_ternary(std::span<const TernaryRun> runs, bool binary);

unsigned run_payload_bits(std::uint32_t code, bool binary);
/// Payload = terminal sign (1 = -1, ternary only) followed by the run length
/// bits below its leading one.
CodingPair run_to_pair(const TernaryRun& run, bool binary);
/// A trailing-run pair yields zero_run 0; runs_from_pairs fills in the length.
TernaryRun pair_to_run(const CodingPair& pair, bool binary);
std::vector<TernaryRun> runs_from_pairs(std::span<const CodingPair> pairs, bool binary, std::uint64_t element_count);

/// Groups of 8 (zero padded). Code = occupancy mask with the first weight in
/// the MSB; payload = one sign bit per nonzero in order (1 = -1), none in
/// binary mode.
std::vector<CodingPair> ternary_to_groups(std::span<const std::int8_t> weights, bool binary);
std::vector<std::int8_t> groups_to_ternary(std::span<const CodingPair> groups, bool binary,
                                           std::uint64_t element_count);

}  // namespace cpc
