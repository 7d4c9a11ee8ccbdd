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

#include "cpc/formats/ternary.hpp"

#include <bit>
#include <string>

#include "cpc/error.hpp"

namespace cpc {

namespace {

void check_weight(std::int8_t w, bool binary, std::size_t at) {
  const bool ok = binary ? (w == 0 || w == 1) : (w >= -1 && w <= 1);
  if (!ok) throw Error(ErrorKind::Contract, "weight " + std::to_string(w) + " outside the alphabet", at);
}

}  // namespace

std::vector<TernaryRun> ternary_to_runs(std::span<const std::int8_t> weights, bool binary) {
  std::vector<TernaryRun> runs;
  std::uint64_t zeros = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    check_weight(weights[i], binary, i);
    if (weights[i] == 0) {
      ++zeros;
      continue;
    }
    TernaryRun r;
    r.zero_run = zeros;
    if (!binary) r.terminal_sign = weights[i];
    runs.push_back(r);
    zeros = 0;
  }
  if (zeros) runs.push_back({zeros, std::nullopt, true});
  return runs;
}

std::vector<std::int8_t> runs_to_ternary(std::span<const TernaryRun> runs, bool binary) {
  std::vector<std::int8_t> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    if (r.trailing && i + 1 != runs.size()) throw Error(ErrorKind::Contract, "trailing run before the end", i);
    out.insert(out.end(), r.zero_run, 0);
    if (r.trailing) break;
    if (binary) {
      out.push_back(1);
    } else {
      if (!r.terminal_sign || (*r.terminal_sign != 1 && *r.terminal_sign != -1))
        throw Error(ErrorKind::Contract, "ternary run lacks a terminal sign", i);
      out.push_back(*r.terminal_sign);
    }
  }
  return out;
}

unsigned run_payload_bits(std::uint32_t code, bool binary) {
  if (code == kTrailingRunCode) return 0;
  const unsigned low = code == 0 ? 0 : code - 1;
  return low + (binary ? 0 : 1);
}

CodingPair run_to_pair(const TernaryRun& run, bool binary) {
  if (run.trailing) return {kTrailingRunCode, 0, 0};
  if (run.zero_run >= (std::uint64_t{1} << 32)) throw Error(ErrorKind::Contract, "zero run too long");
  const auto k = static_cast<std::uint32_t>(std::bit_width(run.zero_run));
  const unsigned low_bits = k == 0 ? 0 : k - 1;
  std::uint32_t payload = static_cast<std::uint32_t>(run.zero_run & low_mask(low_bits));
  if (!binary) {
    if (!run.terminal_sign) throw Error(ErrorKind::Contract, "ternary run lacks a terminal sign");
    payload |= (*run.terminal_sign < 0 ? std::uint32_t{1} : 0u) << low_bits;
  }
  return {k, payload, static_cast<std::uint8_t>(run_payload_bits(k, binary))};
}

TernaryRun pair_to_run(const CodingPair& pair, bool binary) {
  if (pair.code >= kRunCodes)
    throw Error(ErrorKind::Alphabet, "run code " + std::to_string(pair.code) + " out of range");
  if (pair.payload_len != run_payload_bits(pair.code, binary))
    throw Error(ErrorKind::Contract, "payload width does not match run code");
  TernaryRun r;
  if (pair.code == kTrailingRunCode) {
    r.trailing = true;
    return r;
  }
  const unsigned low_bits = pair.code == 0 ? 0 : pair.code - 1;
  const std::uint64_t low = pair.payload & low_mask(low_bits);
  r.zero_run = pair.code == 0 ? 0 : (std::uint64_t{1} << low_bits) | low;
  if (!binary) r.terminal_sign = (pair.payload >> low_bits) & 1u ? -1 : 1;
  return r;
}

std::vector<TernaryRun> runs_from_pairs(std::span<const CodingPair> pairs, bool binary, std::uint64_t element_count) {
  std::vector<TernaryRun> runs;
  runs.reserve(pairs.size());
  std::uint64_t covered = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    TernaryRun r = pair_to_run(pairs[i], binary);
    if (r.trailing) {
      if (i + 1 != pairs.size()) throw Error(ErrorKind::Corruption, "trailing run before the end", i);
      if (covered >= element_count) throw Error(ErrorKind::Corruption, "empty trailing run", i);
      r.zero_run = element_count - covered;
    }
    covered += r.zero_run + (r.trailing ? 0 : 1);
    runs.push_back(r);
  }
  if (covered != element_count)
    throw Error(ErrorKind::Corruption, "runs cover " + std::to_string(covered) + " of " +
                                           std::to_string(element_count) + " weights");
  return runs;
}

std::vector<CodingPair> ternary_to_groups(std::span<const std::int8_t> weights, bool binary) {
  std::vector<CodingPair> out((weights.size() + kGroupSize - 1) / kGroupSize);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    check_weight(weights[i], binary, i);
    if (weights[i] == 0) continue;
    auto& p = out[i / kGroupSize];
    p.code |= 0x80u >> (i % kGroupSize);
    if (!binary) {
      p.payload = (p.payload << 1) | (weights[i] < 0 ? 1u : 0u);
      ++p.payload_len;
    }
  }
  return out;
}

std::vector<std::int8_t> groups_to_ternary(std::span<const CodingPair> groups, bool binary,
                                           std::uint64_t element_count) {
  if ((element_count + kGroupSize - 1) / kGroupSize != groups.size())
    throw Error(ErrorKind::Corruption, "group count does not match element count");
  std::vector<std::int8_t> out(groups.size() * kGroupSize, 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& p = groups[g];
    if (p.code > 0xFF) throw Error(ErrorKind::Alphabet, "group mask out of range", g);
    const auto ones = static_cast<unsigned>(std::popcount(p.code));
    if (p.payload_len != (binary ? 0u : ones)) throw Error(ErrorKind::Contract, "payload width does not match mask", g);
    unsigned left = ones;
    for (unsigned j = 0; j < kGroupSize; ++j) {
      if (!(p.code & (0x80u >> j))) continue;
      --left;
      out[g * kGroupSize + j] = binary ? 1 : ((p.payload >> left) & 1u ? -1 : 1);
    }
  }
  for (std::size_t i = element_count; i < out.size(); ++i)
    if (out[i] != 0) throw Error(ErrorKind::Corruption, "nonzero weight in group padding");
  out.resize(element_count);
  return out;
}

}  // namespace cpc
