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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpc/bytes.hpp"
#include "cpc/coding_pair.hpp"

namespace cpc {

/// Largest alphabet a model may hold.
inline constexpr std::size_t kMaxCodes = 256;

// What a code means to the format adapters. The coders ignore it.
struct Exponent {
  std::int32_t value = 0;
  bool salient = false;  // second code for the same exponent (important weights)
  friend bool operator==(const Exponent&, const Exponent&) = default;
};
struct DirectValue {
  std::uint32_t bits = 0;
  std::uint8_t width = 32;
  friend bool operator==(const DirectValue&, const DirectValue&) = default;
};
struct RunLength {
  std::int32_t magnitude_class = 0;  // NZ-MSB class of the run, -1 for a trailing run
  friend bool operator==(const RunLength&, const RunLength&) = default;
};
struct GroupMask {
  std::uint8_t mask = 0;
  friend bool operator==(const GroupMask&, const GroupMask&) = default;
};
struct IntMagnitude {
  std::int32_t k = 0;
  friend bool operator==(const IntMagnitude&, const IntMagnitude&) = default;
};

using Mapping = std::variant<std::monostate, Exponent, DirectValue, RunLength, GroupMask, IntMagnitude>;
using CodeMap = std::vector<Mapping>;

struct CodeSpec {
  std::uint32_t freq = 0;  // n_i, in units of 2^-N
  std::uint8_t payload_bits = 0;
  Mapping mapping;

  friend bool operator==(const CodeSpec&, const CodeSpec&) = default;
};

/// Fixed-point code probabilities n_i / 2^N plus per-code payload widths.
///
/// The constructor does not validate; use validate_model() or let a coder
/// reject the model. Frequencies are fixed after construction, only the
/// descriptive fields (payload width, mapping) may be filled in while the
/// model is being assembled.
class ProbabilityModel {
 public:
  ProbabilityModel() = default;
  ProbabilityModel(unsigned precision_bits, std::vector<CodeSpec> codes);

  unsigned precision_bits() const { return precision_; }
  std::uint32_t scale() const { return std::uint32_t{1} << precision_; }
  std::size_t size() const { return codes_.size(); }
  bool empty() const { return codes_.empty(); }

  const CodeSpec& operator[](std::size_t i) const { return codes_[i]; }
  std::span<const CodeSpec> codes() const { return codes_; }
  std::uint32_t cumulative(std::size_t i) const { return cumulative_[i]; }

  /// True when some exponent carries two codes (ordinary and salient).
  bool dual_code() const;

  void describe(std::size_t i, std::uint8_t payload_bits, Mapping mapping);

  CodeMap code_map() const;

  friend bool operator==(const ProbabilityModel& a, const ProbabilityModel& b) {
    return a.precision_ == b.precision_ && a.codes_ == b.codes_;
  }

 private:
  unsigned precision_ = 16;
  std::vector<CodeSpec> codes_;
  std::vector<std::uint32_t> cumulative_;
};

struct FrequencyTable {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t nonzero() const;
};

FrequencyTable count_codes(std::span<const CodingPair> pairs, std::size_t alphabet_size);

/// Largest-remainder normalization of raw counts to frequencies summing to
/// 2^N. Keys with a zero count are dropped; code i of the result is the i-th
/// key with a nonzero count (see key_to_code()).
ProbabilityModel normalize_counts(const FrequencyTable& freq, unsigned precision_bits);

/// Key -> code index as assigned by normalize_counts(); -1 for dropped keys.
std::vector<std::int32_t> key_to_code(const FrequencyTable& freq);

/// Counts restricted to the nonzero keys, i.e. in the code space of the
/// model normalize_counts() returns.
FrequencyTable compact(const FrequencyTable& freq);

struct BitCount {
  double total = 0.0;
  double average = 0.0;
};

/// Size of coding `freq` (indexed by model code) with the model's own
/// probabilities plus payload bits.
BitCount ideal_bits(const ProbabilityModel& model, const FrequencyTable& freq);

/// Empirical entropy of `freq` plus payload bits: the ideal entropy coder
/// bound with probabilities estimated from the counts themselves.
BitCount entropy_bits(const FrequencyTable& freq, std::span<const std::uint8_t> payload_bits);

struct ModelViolation {
  enum class Kind {
    UnsupportedPrecision,
    EmptyAlphabet,
    TooManyCodes,
    SumMismatch,
    ZeroProbability,
    PayloadTooWide,
    DuplicateMapping,
  };
  Kind kind;
  std::size_t code = 0;
  std::string message;
};

std::vector<ModelViolation> validate_model(const ProbabilityModel& model);

// Model table layout (also embedded in the container header):
//   u16 N_c, then per code: u16 n_i, u8 payload_bits, u8 mapping_kind, i32 mapping_value
// n_i == 2^N (a lone certain code at N = 16) is written as 0.
void write_model_table(ByteWriter& out, const ProbabilityModel& model);
ProbabilityModel read_model_table(ByteReader& in, unsigned precision_bits);

/// Standalone model blob: "CPM1", u8 precision, then the model table.
std::vector<std::uint8_t> serialize_model(const ProbabilityModel& model);
ProbabilityModel deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace cpc
