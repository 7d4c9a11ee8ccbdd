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

#include "cpc/formats/direct.hpp"

#include <string>

namespace cpc {

DirectValueMap::DirectValueMap(std::span<const std::uint32_t> values) {
  for (std::size_t i = 0; i < values.size(); ++i) add(values[i], static_cast<std::uint32_t>(i));
}

DirectValueMap DirectValueMap::from_model(const ProbabilityModel& model) {
  DirectValueMap m;
  for (std::size_t i = 0; i < model.size(); ++i)
    if (auto* d = std::get_if<DirectValue>(&model[i].mapping)) m.add(d->bits, static_cast<std::uint32_t>(i));
  return m;
}

void DirectValueMap::add(std::uint32_t value, std::uint32_t code) {
  if (!codes_.emplace(value, code).second)
    throw Error(ErrorKind::Contract, "value " + std::to_string(value) + " already has a code");
}

std::optional<std::uint32_t> DirectValueMap::find(std::uint32_t value) const {
  auto it = codes_.find(value);
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

namespace {

DirectValue direct_of(std::span<const Mapping> code_map, std::uint32_t code) {
  if (code >= code_map.size()) throw Error(ErrorKind::Alphabet, "code " + std::to_string(code) + " not in model");
  auto* d = std::get_if<DirectValue>(&code_map[code]);
  if (!d) throw Error(ErrorKind::Mapping, "code " + std::to_string(code) + " carries no value");
  return *d;
}

std::uint32_t code_for(std::uint32_t value, const DirectValueMap& map) {
  auto c = map.find(value);
  if (!c) throw Error(ErrorKind::Alphabet, "value " + std::to_string(value) + " has no code");
  return *c;
}

}  // namespace

CodingPair direct_to_pair(std::uint32_t value, const DirectValueMap& map) { return {code_for(value, map), 0, 0}; }

std::uint32_t pair_to_direct(const CodingPair& pair, std::span<const Mapping> code_map) {
  if (pair.payload_len != 0) throw Error(ErrorKind::Contract, "direct value carries a payload");
  return direct_of(code_map, pair.code).bits;
}

CodingPair signed_direct_to_pair(std::int32_t value, const DirectValueMap& magnitudes) {
  const auto mag = static_cast<std::uint32_t>(value < 0 ? -static_cast<std::int64_t>(value) : value);
  const std::uint32_t code = code_for(mag, magnitudes);
  if (mag == 0) return {code, 0, 0};
  return {code, value < 0 ? 1u : 0u, 1};
}

std::int32_t pair_to_signed_direct(const CodingPair& pair, std::span<const Mapping> code_map) {
  const auto mag = static_cast<std::int64_t>(direct_of(code_map, pair.code).bits);
  if (mag == 0) {
    if (pair.payload_len != 0) throw Error(ErrorKind::Contract, "zero carries a sign");
    return 0;
  }
  if (pair.payload_len != 1) throw Error(ErrorKind::Contract, "signed value needs exactly one sign bit");
  return static_cast<std::int32_t>(pair.payload ? -mag : mag);
}

}  // namespace cpc
