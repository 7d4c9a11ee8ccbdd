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
#include "cpc/formats/direct.hpp"
#include "cpc/formats/float.hpp"
#include "cpc/formats/posit.hpp"
#include "cpc/model.hpp"

namespace cpc {

enum class FormatKind : std::uint8_t {
  Pairs = 0,  // opaque pairs, no element layer
  Float = 1,
  Posit = 2,
  Integer = 3,
  TernaryRuns = 4,
  TernaryGroups = 5,
  Direct = 6,
};

const char* to_string(FormatKind kind);

/// Everything needed to turn a flat little-endian element array into pairs
/// and back.
struct FormatDescriptor {
  FormatKind kind = FormatKind::Pairs;
  std::uint64_t element_count = 0;
  FloatFormat float_format = FloatFormat::bf16();
  PositFormat posit_format;
  std::uint8_t int_bits = 16;  // Integer and Direct element width: 8, 16 or 32
  std::optional<std::uint8_t> max_payload;  // Integer payload cap
  bool binary = false;                      // ternary modes: weights in {0, 1}
  bool sign_magnitude = false;              // Direct: magnitude codes plus a sign bit
  std::optional<double> quant_scale;        // dequantization step of a quantized tensor

  /// Bytes per element in the raw array.
  std::size_t element_bytes() const;
  std::uint64_t raw_bytes() const { return element_count * element_bytes(); }

  friend bool operator==(const FormatDescriptor&, const FormatDescriptor&) = default;
};

void validate(const FormatDescriptor& desc);

/// Pairs whose code field holds a format key, with per-key payload widths and
/// mappings. Keys become model codes once their frequencies are known.
struct KeyedPairs {
  std::vector<CodingPair> pairs;
  std::vector<std::uint8_t> payload_bits;  // indexed by key
  std::vector<Mapping> mappings;           // indexed by key

  std::size_t key_space() const { return payload_bits.size(); }
};

struct EncodeOptions {
  /// Direct mode value list; key i stands for values[i]. Without it the
  /// sorted distinct input values are used.
  std::optional<std::vector<std::uint32_t>> direct_values;
};

/// Splits `raw` (element_count elements) into keyed pairs.
KeyedPairs to_keyed_pairs(const FormatDescriptor& desc, std::span<const std::uint8_t> raw,
                          const EncodeOptions& options = {});

struct BuiltModel {
  ProbabilityModel model;
  std::vector<std::int32_t> key_to_code;  // -1 for keys absent from the pairs
};

/// Counts the keys of `pairs`, normalizes, and attaches each key's payload
/// width and mapping to its code.
BuiltModel build_model(const KeyedPairs& keys, std::span<const CodingPair> pairs, unsigned precision_bits);

/// Replaces keys by codes in place.
void remap_keys(std::span<CodingPair> pairs, std::span<const std::int32_t> key_to_code);

struct EncodedTensor {
  ProbabilityModel model;
  std::vector<CodingPair> pairs;
};

EncodedTensor encode_tensor(const FormatDescriptor& desc, std::span<const std::uint8_t> raw, unsigned precision_bits,
                            const EncodeOptions& options = {});

/// Rebuilds element bytes from decoded pairs, one pair at a time. The code
/// map may change between calls (per-block models).
class ElementDecoder {
 public:
  explicit ElementDecoder(const FormatDescriptor& desc);

  void put(const CodingPair& pair, std::span<const Mapping> code_map, std::vector<std::uint8_t>& out);
  std::uint64_t produced() const { return produced_; }
  /// Checks that exactly element_count elements were produced.
  void finish() const;

 private:
  void emit(std::uint64_t value, std::vector<std::uint8_t>& out);

  FormatDescriptor desc_;
  std::size_t width_;
  std::uint64_t produced_ = 0;
  std::uint64_t pairs_ = 0;
  bool trailing_seen_ = false;
};

std::vector<std::uint8_t> decode_tensor(const FormatDescriptor& desc, std::span<const Mapping> code_map,
                                        std::span<const CodingPair> pairs);

}  // namespace cpc
