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

#include "cpc/rans.hpp"

namespace cpc {

namespace detail {

void check_pair(const CodingPair& pair, std::size_t alphabet, std::uint8_t expected_bits) {
  if (pair.code >= alphabet) throw Error(ErrorKind::Alphabet, "code " + std::to_string(pair.code) + " not in model");
  if (pair.payload_len != expected_bits)
    throw Error(ErrorKind::Contract, "code " + std::to_string(pair.code) + " expects " +
                                         std::to_string(expected_bits) + " payload bits, got " +
                                         std::to_string(pair.payload_len));
  if (!payload_is_clean(pair)) throw Error(ErrorKind::Contract, "payload has bits above its length");
}

void require_valid(const ProbabilityModel& model) {
  auto violations = validate_model(model);
  if (!violations.empty()) throw Error(ErrorKind::Model, violations.front().message, violations.front().code);
}

}  // namespace detail

RansTables::RansTables(const ProbabilityModel& model) : precision_(model.precision_bits()) {
  detail::require_valid(model);
  freq_.resize(model.size());
  cum_.resize(model.size());
  payload_.resize(model.size());
  slot_.resize(model.scale());
  for (std::size_t i = 0; i < model.size(); ++i) {
    freq_[i] = model[i].freq;
    cum_[i] = model.cumulative(i);
    payload_[i] = model[i].payload_bits;
    std::fill_n(slot_.begin() + cum_[i], freq_[i], static_cast<std::uint8_t>(i));
  }
}

RansEncoder::RansEncoder(const ProbabilityModel& model) : RansEncoder(std::make_shared<const RansTables>(model)) {}

RansEncoder::RansEncoder(std::shared_ptr<const RansTables> tables) : tables_(std::move(tables)) {}

RansEncoder RansEncoder::resume(std::shared_ptr<const RansTables> tables, const LanePayload<Word>& payload,
                                const CoderCursor& at, std::uint64_t pairs_below) {
  if (at.state < kLowerBound) throw Error(ErrorKind::Corruption, "checkpoint state outside the coding interval");
  RansEncoder e(std::move(tables));
  const std::uint64_t total = payload.words.size() * std::uint64_t{32};
  const std::uint64_t consumed = at.word_offset * 32 + at.bit_offset;
  if (consumed > total) throw Error(ErrorKind::Contract, "cursor outside the stream");
  e.out_ = BitStackWriter<Word>::from_stream(payload.words, total, total - consumed);
  e.x_ = at.state;
  e.pairs_ = pairs_below;
  return e;
}

LanePayload<RansEncoder::Word> RansEncoder::flush() {
  if (flushed_) throw Error(ErrorKind::Usage, "encoder already flushed");
  flushed_ = true;
  out_.push(static_cast<std::uint32_t>(x_ >> 32), 32);
  out_.push(static_cast<std::uint32_t>(x_), 32);
  return {out_.finish(), pairs_};
}

}  // namespace cpc
