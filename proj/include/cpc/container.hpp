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
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "cpc/bit_stack.hpp"
#include "cpc/coding_pair.hpp"
#include "cpc/formats/codec.hpp"
#include "cpc/model.hpp"

namespace cpc {

// File layout, all fields little-endian:
//
//   "CPC1" u8 version u8 coder_kind u8 flags u8 lane_count u64 pair_count
//   format descriptor: ([u8 tag][u16 len][len bytes])* [u8 0]
//   model table: u16 N_c, then per code u16 n_i, u8 payload_bits,
//                u8 mapping_kind, i32 mapping_value
//   per-lane u64 payload length in bytes
//   checkpoint index (flag bit 2): u32 stride, u32 count, then per entry
//     u64 pair_index and per lane {u64 word_offset, u8 bit_offset, u64 state}
//   lane payloads: coder words in decode order
//   per-lane u32 CRC-32 of the payload bytes (flag bit 0)
//
// Pair i belongs to lane i % lane_count. In dynamic mode (flag bit 1) the
// header model table is empty and the payload area holds block records
//   u32 block_pairs, model table, per-lane u64 segment length, segments
// with round-robin restarting at every block; lane lengths and CRCs then
// cover the concatenation of a lane's segments.

enum class CoderKind : std::uint8_t { Rans16 = 1, Tans8 = 2 };

const char* to_string(CoderKind kind);
unsigned precision_of(CoderKind kind);
unsigned word_bits_of(CoderKind kind);

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr unsigned kMaxLanes = 255;

struct WriteOptions {
  CoderKind coder = CoderKind::Rans16;
  unsigned lanes = 1;
  bool crc = true;
  std::uint32_t checkpoint_stride = 0;  // 0: no checkpoint index
};

/// Resumable decoder position for every lane. Valid only for the stream
/// whose header hashes to stream_tag.
struct Checkpoint {
  std::uint64_t pair_index = 0;
  std::uint32_t stream_tag = 0;
  std::vector<CoderCursor> lanes;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct StreamHeader {
  std::uint8_t version = kContainerVersion;
  CoderKind coder = CoderKind::Rans16;
  bool crc = true;
  bool dynamic = false;
  bool indexed = false;
  unsigned lanes = 1;
  std::uint64_t pair_count = 0;
  FormatDescriptor format;
  std::uint32_t block_length = 0;  // dynamic mode only
  ProbabilityModel model;          // empty in dynamic mode
  std::vector<std::uint64_t> lane_bytes;
  std::uint32_t checkpoint_stride = 0;
  std::vector<Checkpoint> checkpoints;
  std::uint32_t stream_tag = 0;        // CRC-32 of the bytes from magic through the lane length table
  std::uint64_t payload_offset = 0;    // first byte after the header
};

/// Encodes `pairs` under `model` (precision must match the coder) and writes
/// a complete stream. Returns the number of bytes written.
std::uint64_t write_stream(std::ostream& out, const ProbabilityModel& model, std::span<const CodingPair> pairs,
                           const FormatDescriptor& format, const WriteOptions& options);

/// Per-block models: every `block_len` pairs are counted, normalized and
/// coded on their own. `keys` holds pairs whose code field is a format key.
std::uint64_t write_blocks_dynamic(std::ostream& out, const KeyedPairs& keys, std::uint32_t block_len,
                                   const FormatDescriptor& format, const WriteOptions& options);

/// Restores the encoders at `at` and codes `pairs` on top of the retained
/// suffix. The result decodes to `pairs` followed by the old pairs from
/// at.pair_index on. Requires (pairs.size() - at.pair_index) % lanes == 0 so
/// retained pairs stay in their lanes. The checkpoint index is not carried
/// over. `format` replaces the old descriptor when given.
std::uint64_t append_stream(std::istream& old_stream, const Checkpoint& at, std::span<const CodingPair> pairs,
                            std::ostream& out, const std::optional<FormatDescriptor>& format = std::nullopt);

/// Sequential reader over a seekable stream. Memory use is bounded by the
/// header plus a fixed buffer per lane.
class StreamReader {
 public:
  static constexpr std::size_t kLaneBufferBytes = 1 << 16;

  explicit StreamReader(std::istream& in);
  ~StreamReader();
  StreamReader(const StreamReader&) = delete;
  StreamReader& operator=(const StreamReader&) = delete;

  const StreamHeader& header() const { return header_; }

  /// Next pair in original order, or nullopt after the last one (at which
  /// point lane termination and CRCs have been verified).
  std::optional<CodingPair> next();
  /// Model mappings of the block that produced the most recent pair.
  std::span<const Mapping> code_map() const { return code_map_; }
  std::uint64_t position() const { return position_; }

  /// Cursor of every lane at the current position (static streams only).
  Checkpoint checkpoint_here() const;
  /// Jumps to a checkpoint of this stream. CRCs are not verified after a
  /// resume because the skipped bytes are never read.
  void resume(const Checkpoint& at);

  /// Bytes currently held in lane buffers.
  std::size_t buffered_bytes() const;
  /// Payload bytes fetched since construction or the last resume.
  std::uint64_t bytes_read() const;

 private:
  struct Lane;

  void open_static();
  void open_block();
  void finish_lanes();

  std::istream& in_;
  StreamHeader header_;
  std::vector<std::unique_ptr<Lane>> lanes_;
  CodeMap code_map_;
  std::uint64_t position_ = 0;
  std::uint64_t block_start_ = 0;   // dynamic: first pair of the current block
  std::uint64_t block_pairs_ = 0;   // dynamic: pairs in the current block
  std::uint64_t next_block_offset_ = 0;
  bool verify_crc_ = true;
  bool done_ = false;
};

/// Parses only the header.
StreamHeader read_header(std::istream& in);

/// Whole-stream helpers.
std::vector<CodingPair> read_all_pairs(std::istream& in);
std::vector<std::uint8_t> read_all_elements(std::istream& in);

}  // namespace cpc
