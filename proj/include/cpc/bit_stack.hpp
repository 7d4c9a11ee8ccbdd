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

#include <algorithm>
#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpc/coding_pair.hpp"
#include "cpc/error.hpp"

namespace cpc {

// Raw bits and coder words share one LIFO channel. The writer packs pushed
// bits into fixed-size words as they fill; the reader pops them back in
// reverse push order. A stream is terminated by a single 1 bit followed by
// zero padding up to the next word boundary, so its length in bits is always
// a multiple of the word size.
//
// Words are handed to the reader in decode order: the last word written is
// the first one read, and inside a word the most recently pushed bits sit in
// the least significant positions.

template <typename S, typename Word>
concept WordSource = requires(S s, Word& w) {
  { s.next(w) } -> std::same_as<bool>;
  { s.exhausted() } -> std::same_as<bool>;
};

template <typename Word>
class SpanWordSource {
 public:
  SpanWordSource() = default;
  explicit SpanWordSource(std::span<const Word> words, std::size_t start = 0) : words_(words), pos_(start) {}

  bool next(Word& w) {
    if (pos_ >= words_.size()) return false;
    w = words_[pos_++];
    return true;
  }
  bool exhausted() const { return pos_ >= words_.size(); }
  std::size_t position() const { return pos_; }

 private:
  std::span<const Word> words_;
  std::size_t pos_ = 0;
};

/// Position of a decoder inside a lane: bits already consumed, expressed as
/// a word index plus a bit index inside that word, and the coder state.
struct CoderCursor {
  std::uint64_t word_offset = 0;
  std::uint32_t bit_offset = 0;
  std::uint64_t state = 0;

  friend bool operator==(const CoderCursor&, const CoderCursor&) = default;
};

/// Words of one encoded lane in decode order.
template <typename Word>
struct LanePayload {
  std::vector<Word> words;
  std::uint64_t pair_count = 0;
};

template <typename Word>
class BitStackWriter {
 public:
  static constexpr unsigned kWordBits = sizeof(Word) * 8;

  BitStackWriter() = default;

  // value must fit in n bits, n <= 32.
  void push(std::uint32_t value, unsigned n) {
    acc_ = (acc_ << n) | value;
    pending_ += n;
    while (pending_ >= kWordBits) {
      pending_ -= kWordBits;
      words_.push_back(static_cast<Word>(acc_ >> pending_));
    }
    pushed_ += n;
  }

  std::uint64_t bits_pushed() const { return pushed_; }

  /// Appends the terminator and returns the words in decode order.
  std::vector<Word> finish() {
    push(1, 1);
    if (pending_) push(0, kWordBits - pending_);
    std::vector<Word> out(words_.rbegin(), words_.rend());
    words_.clear();
    return out;
  }

  /// Rebuilds a writer holding the bottom `bits` bits of a finished stream.
  static BitStackWriter from_stream(std::span<const Word> decode_order, std::uint64_t total_bits, std::uint64_t bits) {
    if (bits > total_bits || total_bits != decode_order.size() * std::uint64_t{kWordBits})
      throw Error(ErrorKind::Contract, "cursor outside the stream");
    BitStackWriter w;
    const std::uint64_t consumed = total_bits - bits;
    const std::size_t word = static_cast<std::size_t>(consumed / kWordBits);
    const unsigned bit = static_cast<unsigned>(consumed % kWordBits);
    std::size_t first_full = word;
    if (bit) {
      w.pending_ = kWordBits - bit;
      w.acc_ = static_cast<std::uint64_t>(decode_order[word]) >> bit;
      first_full = word + 1;
    }
    for (std::size_t i = decode_order.size(); i-- > first_full;) w.words_.push_back(decode_order[i]);
    w.pushed_ = bits;
    return w;
  }

 private:
  std::vector<Word> words_;  // oldest first
  std::uint64_t acc_ = 0;
  unsigned pending_ = 0;
  std::uint64_t pushed_ = 0;
};

template <typename Word, WordSource<Word> Source>
class BitStackReader {
 public:
  static constexpr unsigned kWordBits = sizeof(Word) * 8;

  BitStackReader() = default;
  explicit BitStackReader(Source src) : src_(std::move(src)) {}

  /// Reads the first word and strips the terminator.
  void open() {
    Word w{};
    if (!src_.next(w) || w == 0) throw Error(ErrorKind::Corruption, "missing stream terminator", 0);
    const unsigned skip = static_cast<unsigned>(std::countr_zero(w)) + 1;
    acc_ = static_cast<std::uint64_t>(w) >> skip;
    count_ = kWordBits - skip;
    consumed_ = skip;
  }

  /// Continues from a cursor; the source must be positioned at its word.
  void resume(std::uint64_t word_offset, unsigned bit_offset) {
    acc_ = 0;
    count_ = 0;
    consumed_ = word_offset * kWordBits;
    if (bit_offset) {
      Word w{};
      if (!src_.next(w)) throw Error(ErrorKind::Corruption, "checkpoint beyond end of lane", consumed_);
      acc_ = static_cast<std::uint64_t>(w) >> bit_offset;
      count_ = kWordBits - bit_offset;
      consumed_ += bit_offset;
    }
  }

  std::uint32_t pop(unsigned n) {
    while (count_ < n) refill();
    const auto v = static_cast<std::uint32_t>(acc_ & low_mask(n));
    acc_ >>= n;
    count_ -= n;
    consumed_ += n;
    return v;
  }

  std::uint64_t consumed_bits() const { return consumed_; }
  bool drained() const { return count_ == 0 && src_.exhausted(); }
  Source& source() { return src_; }

 private:
  void refill() {
    Word w{};
    if (!src_.next(w)) throw Error(ErrorKind::Corruption, "compressed lane truncated", consumed_ / kWordBits);
    acc_ |= static_cast<std::uint64_t>(w) << count_;
    count_ += kWordBits;
  }

  Source src_{};
  std::uint64_t acc_ = 0;
  unsigned count_ = 0;
  std::uint64_t consumed_ = 0;
};

}  // namespace cpc
