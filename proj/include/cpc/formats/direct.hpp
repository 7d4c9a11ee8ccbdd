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
#include <unordered_map>

#include "cpc/coding_pair.hpp"
#include "cpc/model.hpp"

namespace cpc {

/// Exact value -> code table for small alphabets.
class DirectValueMap {
 public:
  DirectValueMap() = default;
  /// Code i stands for values[i].
  explicit DirectValueMap(std::span<const std::uint32_t> values);
  static DirectValueMap from_model(const ProbabilityModel& model);

  void add(std::uint32_t value, std::uint32_t code);
  std::optional<std::uint32_t> find(std::uint32_t value) const;
  std::size_t size() const { return codes_.size(); }

 private:
  std::unordered_map<std::uint32_t, std::uint32_t> codes_;
};

/// One code per value, empty payload.
CodingPair direct_to_pair(std::uint32_t value, const DirectValueMap& map);
std::uint32_t pair_to_direct(const CodingPair& pair, std::span<const Mapping> code_map);

/// One code per magnitude plus a sign payload bit (none for zero).
CodingPair signed_direct_to_pair(std::int32_t value, const DirectValueMap& magnitudes);
std::int32_t pair_to_signed_direct(const CodingPair& pair, std::span<const Mapping> code_map);

}  // namespace cpc
