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

#include "cpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace cpc {

namespace {

using i128 = __int128;

enum MappingKind : std::uint8_t {
  kNone = 0,
  kExponent = 1,
  kDirect = 2,
  kRun = 3,
  kGroup = 4,
  kIntMagnitude = 5,
};

bool supported_precision(unsigned n) { return n == 8 || n == 16; }

}  // namespace

ProbabilityModel::ProbabilityModel(unsigned precision_bits, std::vector<CodeSpec> codes)
    : precision_(precision_bits), codes_(std::move(codes)) {
  cumulative_.resize(codes_.size());
  std::uint32_t c = 0;
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    cumulative_[i] = c;
    c += codes_[i].freq;
  }
}

bool ProbabilityModel::dual_code() const {
  return std::any_of(codes_.begin(), codes_.end(), [](const CodeSpec& c) {
    auto* e = std::get_if<Exponent>(&c.mapping);
    return e && e->salient;
  });
}

void ProbabilityModel::describe(std::size_t i, std::uint8_t payload_bits, Mapping mapping) {
  codes_.at(i).payload_bits = payload_bits;
  codes_[i].mapping = std::move(mapping);
}

CodeMap ProbabilityModel::code_map() const {
  CodeMap out;
  out.reserve(codes_.size());
  for (const auto& c : codes_) out.push_back(c.mapping);
  return out;
}

std::size_t FrequencyTable::nonzero() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c != 0; }));
}

FrequencyTable count_codes(std::span<const CodingPair> pairs, std::size_t alphabet_size) {
  FrequencyTable f;
  f.counts.assign(alphabet_size, 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].code >= alphabet_size)
      throw Error(ErrorKind::Alphabet, "code " + std::to_string(pairs[i].code) + " outside alphabet", i);
    ++f.counts[pairs[i].code];
  }
  f.total = pairs.size();
  return f;
}

ProbabilityModel normalize_counts(const FrequencyTable& freq, unsigned precision_bits) {
  if (!supported_precision(precision_bits))
    throw Error(ErrorKind::Precision, "probability precision must be 8 or 16 bits");
  if (freq.total == 0) throw Error(ErrorKind::EmptyInput, "cannot normalize an empty frequency table");

  const std::uint32_t scale = std::uint32_t{1} << precision_bits;
  std::vector<std::uint64_t> counts;
  for (auto c : freq.counts)
    if (c) counts.push_back(c);
  if (counts.size() > scale || counts.size() > kMaxCodes)
    throw Error(ErrorKind::Capacity, std::to_string(counts.size()) + " codes do not fit the model");

  const i128 total = freq.total;
  std::vector<std::uint32_t> n(counts.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    auto floor = static_cast<std::uint32_t>(i128(counts[i]) * scale / total);
    n[i] = std::max<std::uint32_t>(floor, 1);
    assigned += n[i];
  }

  std::int64_t diff = std::int64_t{scale} - assigned;
  if (diff > 0) {
    // Shortfall (exact share minus assigned) scaled by total; clamped codes
    // have a negative shortfall and sort last.
    auto shortfall = [&](std::size_t i) { return i128(counts[i]) * scale - i128(n[i]) * total; };
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return shortfall(a) > shortfall(b); });
    for (std::size_t j = 0; diff > 0; j = (j + 1) % order.size(), --diff) ++n[order[j]];
  } else if (diff < 0) {
    // Take back the mass handed to clamped codes from the largest
    // frequencies; ties go to the smaller raw count so monotonicity holds.
    auto before = [&](std::size_t a, std::size_t b) {
      if (n[a] != n[b]) return n[a] < n[b];
      if (counts[a] != counts[b]) return counts[a] > counts[b];
      return a > b;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(before)> heap(before);
    for (std::size_t i = 0; i < counts.size(); ++i) heap.push(i);
    while (diff < 0) {
      std::size_t top = heap.top();
      heap.pop();
      --n[top];
      ++diff;
      heap.push(top);
    }
  }

  std::vector<CodeSpec> codes(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) codes[i].freq = n[i];
  return ProbabilityModel(precision_bits, std::move(codes));
}

std::vector<std::int32_t> key_to_code(const FrequencyTable& freq) {
  std::vector<std::int32_t> out(freq.counts.size(), -1);
  std::int32_t next = 0;
  for (std::size_t k = 0; k < freq.counts.size(); ++k)
    if (freq.counts[k]) out[k] = next++;
  return out;
}

FrequencyTable compact(const FrequencyTable& freq) {
  FrequencyTable out;
  for (auto c : freq.counts)
    if (c) out.counts.push_back(c);
  out.total = freq.total;
  return out;
}

BitCount ideal_bits(const ProbabilityModel& model, const FrequencyTable& freq) {
  if (freq.counts.size() != model.size())
    throw Error(ErrorKind::Alphabet, "frequency table and model alphabets differ");
  const double scale = model.scale();
  BitCount out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!freq.counts[i]) continue;
    const double c = static_cast<double>(freq.counts[i]);
    out.total += c * (-std::log2(model[i].freq / scale) + model[i].payload_bits);
  }
  out.average = freq.total ? out.total / static_cast<double>(freq.total) : 0.0;
  return out;
}

BitCount entropy_bits(const FrequencyTable& freq, std::span<const std::uint8_t> payload_bits) {
  if (payload_bits.size() != freq.counts.size())
    throw Error(ErrorKind::Alphabet, "payload table and frequency table alphabets differ");
  BitCount out;
  const double total = static_cast<double>(freq.total);
  for (std::size_t i = 0; i < freq.counts.size(); ++i) {
    if (!freq.counts[i]) continue;
    const double c = static_cast<double>(freq.counts[i]);
    out.total += c * (-std::log2(c / total) + payload_bits[i]);
  }
  out.average = freq.total ? out.total / total : 0.0;
  return out;
}

std::vector<ModelViolation> validate_model(const ProbabilityModel& model) {
  using Kind = ModelViolation::Kind;
  std::vector<ModelViolation> out;
  if (!supported_precision(model.precision_bits()))
    out.push_back({Kind::UnsupportedPrecision, 0, "precision must be 8 or 16 bits"});
  if (model.empty()) {
    out.push_back({Kind::EmptyAlphabet, 0, "model has no codes"});
    return out;
  }
  if (model.size() > kMaxCodes)
    out.push_back({Kind::TooManyCodes, model.size(), "more than 256 codes"});

  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& c = model[i];
    sum += c.freq;
    if (c.freq == 0) out.push_back({Kind::ZeroProbability, i, "zero probability"});
    if (c.payload_bits > 32) out.push_back({Kind::PayloadTooWide, i, "payload wider than 32 bits"});
    if (std::holds_alternative<std::monostate>(c.mapping)) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (model[j].mapping == c.mapping && model[j].payload_bits == c.payload_bits) {
        out.push_back({Kind::DuplicateMapping, i, "duplicate mapping of code " + std::to_string(j)});
        break;
      }
    }
  }
  if (supported_precision(model.precision_bits()) && sum != model.scale())
    out.push_back({Kind::SumMismatch, 0,
                   "sum mismatch: " + std::to_string(sum) + " != " + std::to_string(model.scale())});
  return out;
}

void write_model_table(ByteWriter& out, const ProbabilityModel& model) {
  out.u16(static_cast<std::uint16_t>(model.size()));
  for (const auto& c : model.codes()) {
    out.u16(static_cast<std::uint16_t>(c.freq == 65536 ? 0 : c.freq));
    out.u8(c.payload_bits);
    std::uint8_t kind = kNone;
    std::int32_t value = 0;
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Exponent>) {
            kind = static_cast<std::uint8_t>(kExponent | (m.salient ? 0x08 : 0));
            value = m.value;
          } else if constexpr (std::is_same_v<T, DirectValue>) {
            kind = static_cast<std::uint8_t>(kDirect | ((m.width - 1) << 3));
            value = static_cast<std::int32_t>(m.bits);
          } else if constexpr (std::is_same_v<T, RunLength>) {
            kind = kRun;
            value = m.magnitude_class;
          } else if constexpr (std::is_same_v<T, GroupMask>) {
            kind = kGroup;
            value = m.mask;
          } else if constexpr (std::is_same_v<T, IntMagnitude>) {
            kind = kIntMagnitude;
            value = m.k;
          }
        },
        c.mapping);
    out.u8(kind);
    out.i32(value);
  }
}

ProbabilityModel read_model_table(ByteReader& in, unsigned precision_bits) {
  const std::uint16_t count = in.u16();
  if (count > kMaxCodes) in.fail("model table holds more than 256 codes");
  std::vector<CodeSpec> codes(count);
  for (auto& c : codes) {
    std::uint16_t n = in.u16();
    c.freq = n == 0 && precision_bits == 16 ? 65536u : n;
    c.payload_bits = in.u8();
    if (c.payload_bits > 32) in.fail("payload width above 32 bits");
    const std::uint64_t kind_at = in.offset();
    const std::uint8_t kind = in.u8();
    const std::int32_t value = in.i32();
    switch (kind & 0x07) {
      case kNone:
        break;
      case kExponent:
        c.mapping = Exponent{value, (kind & 0x08) != 0};
        break;
      case kDirect:
        c.mapping = DirectValue{static_cast<std::uint32_t>(value), static_cast<std::uint8_t>((kind >> 3) + 1)};
        break;
      case kRun:
        c.mapping = RunLength{value};
        break;
      case kGroup:
        c.mapping = GroupMask{static_cast<std::uint8_t>(value)};
        break;
      case kIntMagnitude:
        c.mapping = IntMagnitude{value};
        break;
      default:
        throw Error(ErrorKind::Parse, "unknown mapping kind " + std::to_string(kind), kind_at);
    }
  }
  return ProbabilityModel(precision_bits, std::move(codes));
}

std::vector<std::uint8_t> serialize_model(const ProbabilityModel& model) {
  ByteWriter out;
  for (char ch : {'C', 'P', 'M', '1'}) out.u8(static_cast<std::uint8_t>(ch));
  out.u8(static_cast<std::uint8_t>(model.precision_bits()));
  write_model_table(out, model);
  return out.take();
}

ProbabilityModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), "CPM1")) throw Error(ErrorKind::Parse, "bad model magic", 0);
  const std::uint64_t precision_at = in.offset();
  const unsigned precision = in.u8();
  if (!supported_precision(precision)) throw Error(ErrorKind::Parse, "unsupported model precision", precision_at);
  auto model = read_model_table(in, precision);
  if (in.remaining()) in.fail("trailing bytes after model table");
  return model;
}

}  // namespace cpc
