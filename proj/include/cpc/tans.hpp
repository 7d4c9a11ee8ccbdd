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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>

#include "cpc/bit_stack.hpp"
#include "cpc/model.hpp"
#include "cpc/rans.hpp"

namespace cpc {

/// State-machine tables for the table variant: 256 states (8-bit
/// probabilities). States are stored as indices in [0, 256); the coding
/// state itself is 256 + index.
class TansTables {
 public:
  static constexpr unsigned kPrecision = 8;
  static constexpr unsigned kStates = 256;
  static constexpr unsigned kSpreadStep = 163;  // 5/8 * 256 + 3

  struct DecodeEntry {
    std::uint8_t code;
    std::uint8_t bits;   // raw bits to pop
    std::uint16_t base;  // next index = base + popped bits
  };

  struct Transition {
    std::uint8_t next;
    std::uint8_t bits;       // number of bits emitted
    std::uint32_t emitted;   // their value
  };

  explicit TansTables(const ProbabilityModel& model);

  std::size_t size() const { return freq_.size(); }
  std::uint8_t payload_bits(std::uint32_t code) const { return payload_[code]; }
  std::uint32_t freq(std::uint32_t code) const { return freq_[code]; }

  /// Code owning each state slot.
  const std::array<std::uint8_t, kStates>& spread() const { return spread_; }

  Transition encode(std::uint32_t state, std::uint32_t code) const {
    const Symbol& s = symbols_[code];
    const std::uint32_t x = kStates + state;
    const unsigned nb = s.lo_bits + (x >= s.threshold ? 1u : 0u);
    const std::uint32_t reduced = x >> nb;
    return {next_[s.offset + reduced], static_cast<std::uint8_t>(nb), x & low_mask(nb)};
  }

  const DecodeEntry& decode(std::uint32_t state) const { return decode_[state]; }

 private:
  struct Symbol {
    std::uint8_t lo_bits = 0;
    std::uint16_t threshold = 0;
    std::int32_t offset = 0;  // cumulative - freq, so next_[offset + x'] for x' in [n, 2n)
  };

  std::vector<std::uint32_t> freq_;
  std::vector<std::uint8_t> payload_;
  std::vector<Symbol> symbols_;
  std::array<std::uint8_t, kStates> spread_{};
  std::array<std::uint8_t, kStates> next_{};
  std::array<DecodeEntry, kStates> decode_{};
};

/// tANS encoder emitting 16-bit words. Same LIFO contract as RansEncoder.
class TansEncoder {
 public:
  using Word = std::uint16_t;
  static constexpr std::uint32_t kInitialState = 0;

  explicit TansEncoder(const ProbabilityModel& model);
  explicit TansEncoder(std::shared_ptr<const TansTables> tables);

  static TansEncoder resume(std::shared_ptr<const TansTables> tables, const LanePayload<Word>& payload,
                            const CoderCursor& at, std::uint64_t pairs_below);

  void encode(const CodingPair& pair) {
    if (flushed_) throw Error(ErrorKind::Usage, "encoder already flushed");
    detail::check_pair(pair, tables_->size(), tables_->payload_bits(pair.code));
    encode_unchecked(pair);
  }

  void encode_unchecked(const CodingPair& pair) {
    out_.push(pair.payload, pair.payload_len);
    const auto t = tables_->encode(state_, pair.code);
    out_.push(t.emitted, t.bits);
    state_ = t.next;
    ++pairs_;
  }

  std::uint64_t state() const { return state_; }
  std::uint64_t bits_pushed() const { return out_.bits_pushed(); }
  std::uint64_t pair_count() const { return pairs_; }

  LanePayload<Word> flush();

 private:
  std::shared_ptr<const TansTables> tables_;
  BitStackWriter<Word> out_;
  std::uint32_t state_ = kInitialState;
  std::uint64_t pairs_ = 0;
  bool flushed_ = false;
};

template <WordSource<std::uint16_t> Source = SpanWordSource<std::uint16_t>>
class TansDecoder {
 public:
  using Word = std::uint16_t;

  TansDecoder(const ProbabilityModel& model, Source src, std::uint64_t pair_count)
      : TansDecoder(std::make_shared<const TansTables>(model), std::move(src), pair_count) {}

  TansDecoder(std::shared_ptr<const TansTables> tables, Source src, std::uint64_t pair_count)
      : tables_(std::move(tables)), in_(std::move(src)), remaining_(pair_count) {
    in_.open();
    state_ = in_.pop(8);
  }

  static TansDecoder resume(std::shared_ptr<const TansTables> tables, Source src, const CoderCursor& at,
                            std::uint64_t remaining) {
    if (at.state >= TansTables::kStates) throw Error(ErrorKind::Corruption, "checkpoint state outside the table");
    TansDecoder d(std::move(tables), std::move(src));
    d.in_.resume(at.word_offset, at.bit_offset);
    d.state_ = static_cast<std::uint32_t>(at.state);
    d.remaining_ = remaining;
    return d;
  }

  std::uint64_t remaining() const { return remaining_; }

  std::optional<CodingPair> next() {
    if (remaining_ == 0) return std::nullopt;
    return decode();
  }

  CodingPair decode() {
    if (remaining_ == 0) throw Error(ErrorKind::EndOfStream, "no pairs left in lane");
    const auto& e = tables_->decode(state_);
    state_ = e.base + in_.pop(e.bits);
    CodingPair p;
    p.code = e.code;
    p.payload_len = tables_->payload_bits(e.code);
    p.payload = in_.pop(p.payload_len);
    --remaining_;
    return p;
  }

  CoderCursor cursor() const {
    const std::uint64_t bits = in_.consumed_bits();
    return {bits / 16, static_cast<std::uint32_t>(bits % 16), state_};
  }

  void finish() const {
    if (remaining_ != 0) throw Error(ErrorKind::Corruption, "pairs left undecoded");
    if (state_ != TansEncoder::kInitialState || !in_.drained())
      throw Error(ErrorKind::Corruption, "stream does not end at the initial coder state", in_.consumed_bits() / 16);
  }

 private:
  TansDecoder(std::shared_ptr<const TansTables> tables, Source src) : tables_(std::move(tables)), in_(std::move(src)) {}

  std::shared_ptr<const TansTables> tables_;
  BitStackReader<Word, Source> in_;
  std::uint32_t state_ = TansEncoder::kInitialState;
  std::uint64_t remaining_ = 0;
};

}  // namespace cpc
