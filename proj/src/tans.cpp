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

#include "cpc/tans.hpp"

#include <bit>

namespace cpc {

TansTables::TansTables(const ProbabilityModel& model) {
  if (model.precision_bits() != kPrecision)
    throw Error(ErrorKind::Precision, "table coder needs 8-bit probabilities");
  detail::require_valid(model);

  const std::size_t n_codes = model.size();
  freq_.resize(n_codes);
  payload_.resize(n_codes);
  symbols_.resize(n_codes);

  unsigned pos = 0;
  for (std::size_t k = 0; k < n_codes; ++k) {
    freq_[k] = model[k].freq;
    payload_[k] = model[k].payload_bits;
    for (std::uint32_t i = 0; i < freq_[k]; ++i) {
      spread_[pos] = static_cast<std::uint8_t>(k);
      pos = (pos + kSpreadStep) % kStates;
    }
  }

  // Occurrence j of code k (in ascending slot order) is reached from the
  // reduced state n_k + j.
  std::vector<std::uint32_t> seen(n_codes, 0);
  for (unsigned u = 0; u < kStates; ++u) {
    const std::uint8_t k = spread_[u];
    const std::uint32_t j = seen[k]++;
    next_[model.cumulative(k) + j] = static_cast<std::uint8_t>(u);

    const std::uint32_t reduced = freq_[k] + j;
    const unsigned bits = 8 - (std::bit_width(reduced) - 1);
    decode_[u] = {k, static_cast<std::uint8_t>(bits), static_cast<std::uint16_t>((reduced << bits) - kStates)};
  }

  for (std::size_t k = 0; k < n_codes; ++k) {
    Symbol& s = symbols_[k];
    const std::uint32_t n = freq_[k];
    s.offset = static_cast<std::int32_t>(model.cumulative(k)) - static_cast<std::int32_t>(n);
    if (n == kStates) {
      s.lo_bits = 0;
      s.threshold = 2 * kStates;
    } else {
      const unsigned m = std::bit_width(n) - 1;
      s.lo_bits = static_cast<std::uint8_t>(7 - m);
      s.threshold = static_cast<std::uint16_t>((2 * n) << s.lo_bits);
    }
  }
}

TansEncoder::TansEncoder(const ProbabilityModel& model) : TansEncoder(std::make_shared<const TansTables>(model)) {}

TansEncoder::TansEncoder(std::shared_ptr<const TansTables> tables) : tables_(std::move(tables)) {}

TansEncoder TansEncoder::resume(std::shared_ptr<const TansTables> tables, const LanePayload<Word>& payload,
                                const CoderCursor& at, std::uint64_t pairs_below) {
  if (at.state >= TansTables::kStates) throw Error(ErrorKind::Corruption, "checkpoint state outside the table");
  TansEncoder e(std::move(tables));
  const std::uint64_t total = payload.words.size() * std::uint64_t{16};
  const std::uint64_t consumed = at.word_offset * 16 + at.bit_offset;
  if (consumed > total) throw Error(ErrorKind::Contract, "cursor outside the stream");
  e.out_ = BitStackWriter<Word>::from_stream(payload.words, total, total - consumed);
  e.state_ = static_cast<std::uint32_t>(at.state);
  e.pairs_ = pairs_below;
  return e;
}

LanePayload<TansEncoder::Word> TansEncoder::flush() {
  if (flushed_) throw Error(ErrorKind::Usage, "encoder already flushed");
  flushed_ = true;
  out_.push(state_, 8);
  return {out_.finish(), pairs_};
}

}  // namespace cpc
