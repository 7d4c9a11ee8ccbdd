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
#include <memory>
#include <optional>
#include <vector>

#include "cpc/bit_stack.hpp"
#include "cpc/model.hpp"

namespace cpc {

/// Per-code constants for the range variant, built once per model and shared
/// by every coder instance using that model.
class RansTables {
 public:
  explicit RansTables(const ProbabilityModel& model);

  unsigned precision_bits() const { return precision_; }
  std::size_t size() const { return freq_.size(); }
  std::uint32_t freq(std::uint32_t code) const { return freq_[code]; }
  std::uint32_t cumulative(std::uint32_t code) const { return cum_[code]; }
  std::uint8_t payload_bits(std::uint32_t code) const { return payload_[code]; }
  std::uint32_t code_at(std::uint32_t slot) const { return slot_[slot]; }

 private:
  unsigned precision_;
  std::vector<std::uint32_t> freq_;
  std::vector<std::uint32_t> cum_;
  std::vector<std::uint8_t> payload_;
  std::vector<std::uint8_t> slot_;  // slot in [0, 2^N) -> code
};

namespace detail {
void check_pair(const CodingPair& pair, std::size_t alphabet, std::uint8_t expected_bits);
void require_valid(const ProbabilityModel& model);
}  // namespace detail

/// rANS encoder with a 64-bit state kept in [2^32, 2^64) and 32-bit word
/// renormalization. Pairs come back out of the decoder in reverse order.
class RansEncoder {
 public:
  using Word = std::uint32_t;
  static constexpr std::uint64_t kLowerBound = std::uint64_t{1} << 32;

  explicit RansEncoder(const ProbabilityModel& model);
  explicit RansEncoder(std::shared_ptr<const RansTables> tables);

  /// Restores the encoder that produced `payload` as it was when the decoder
  /// stood at `at`, holding `pairs_below` pairs. Encoding more pairs and
  /// flushing yields a stream that decodes the new pairs followed by the
  /// retained ones.
  static RansEncoder resume(std::shared_ptr<const RansTables> tables, const LanePayload<Word>& payload,
                            const CoderCursor& at, std::uint64_t pairs_below);

  void encode(const CodingPair& pair) {
    if (flushed_) throw Error(ErrorKind::Usage, "encoder already flushed");
    detail::check_pair(pair, tables_->size(), tables_->payload_bits(pair.code));
    encode_unchecked(pair);
  }

  void encode_unchecked(const CodingPair& pair) {
    out_.push(pair.payload, pair.payload_len);
    const std::uint32_t f = tables_->freq(pair.code);
    const unsigned n = tables_->precision_bits();
    if ((x_ >> (64 - n)) >= f) {
      out_.push(static_cast<std::uint32_t>(x_), 32);
      x_ >>= 32;
    }
    x_ = ((x_ / f) << n) + (x_ % f) + tables_->cumulative(pair.code);
    ++pairs_;
  }

  std::uint64_t state() const { return x_; }
  std::uint64_t bits_pushed() const { return out_.bits_pushed(); }
  std::uint64_t pair_count() const { return pairs_; }

  /// Pushes the final state and the terminator. The encoder is consumed.
  LanePayload<Word> flush();

 private:
  std::shared_ptr<const RansTables> tables_;
  BitStackWriter<Word> out_;
  std::uint64_t x_ = kLowerBound;
  std::uint64_t pairs_ = 0;
  bool flushed_ = false;
};

template <WordSource<std::uint32_t> Source = SpanWordSource<std::uint32_t>>
class RansDecoder {
 public:
  using Word = std::uint32_t;
  static constexpr std::uint64_t kLowerBound = RansEncoder::kLowerBound;

  RansDecoder(const ProbabilityModel& model, Source src, std::uint64_t pair_count)
      : RansDecoder(std::make_shared<const RansTables>(model), std::move(src), pair_count) {}

  RansDecoder(std::shared_ptr<const RansTables> tables, Source src, std::uint64_t pair_count)
      : tables_(std::move(tables)), in_(std::move(src)), remaining_(pair_count) {
    in_.open();
    const std::uint64_t lo = in_.pop(32);
    const std::uint64_t hi = in_.pop(32);
    x_ = (hi << 32) | lo;
    if (x_ < kLowerBound) throw Error(ErrorKind::Corruption, "final state outside the coding interval", 0);
  }

  /// Continues decoding at `at`; `src` must already be positioned at
  /// at.word_offset.
  static RansDecoder resume(std::shared_ptr<const RansTables> tables, Source src, const CoderCursor& at,
                            std::uint64_t remaining) {
    RansDecoder d(std::move(tables), std::move(src));
    d.in_.resume(at.word_offset, at.bit_offset);
    d.x_ = at.state;
    d.remaining_ = remaining;
    if (d.x_ < kLowerBound) throw Error(ErrorKind::Corruption, "checkpoint state outside the coding interval");
    return d;
  }

  std::uint64_t remaining() const { return remaining_; }

  std::optional<CodingPair> next() {
    if (remaining_ == 0) return std::nullopt;
    return decode();
  }

  CodingPair decode() {
    if (remaining_ == 0) throw Error(ErrorKind::EndOfStream, "no pairs left in lane");
    const unsigned n = tables_->precision_bits();
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    const auto slot = static_cast<std::uint32_t>(x_ & mask);
    const std::uint32_t code = tables_->code_at(slot);
    x_ = tables_->freq(code) * (x_ >> n) + slot - tables_->cumulative(code);
    if (x_ < kLowerBound) {
      x_ = (x_ << 32) | in_.pop(32);
      if (x_ < kLowerBound)
        throw Error(ErrorKind::Corruption, "state left the coding interval", in_.consumed_bits() / 32);
    }
    CodingPair p;
    p.code = code;
    p.payload_len = tables_->payload_bits(code);
    p.payload = in_.pop(p.payload_len);
    --remaining_;
    return p;
  }

  CoderCursor cursor() const {
    const std::uint64_t bits = in_.consumed_bits();
    return {bits / 32, static_cast<std::uint32_t>(bits % 32), x_};
  }

  /// Throws unless every pair was decoded and the stream ended exactly where
  /// the encoder started.
  void finish() const {
    if (remaining_ != 0) throw Error(ErrorKind::Corruption, "pairs left undecoded");
    if (x_ != kLowerBound || !in_.drained())
      throw Error(ErrorKind::Corruption, "stream does not end at the initial coder state", in_.consumed_bits() / 32);
  }

 private:
  RansDecoder(std::shared_ptr<const RansTables> tables, Source src) : tables_(std::move(tables)), in_(std::move(src)) {}

  std::shared_ptr<const RansTables> tables_;
  BitStackReader<Word, Source> in_;
  std::uint64_t x_ = kLowerBound;
  std::uint64_t remaining_ = 0;
};

}  // namespace cpc
