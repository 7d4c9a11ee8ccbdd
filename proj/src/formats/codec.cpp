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

#include "cpc/formats/codec.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "cpc/formats/integer.hpp"
#include "cpc/formats/ternary.hpp"

namespace cpc {

namespace {

std::uint32_t load(std::span<const std::uint8_t> raw, std::size_t index, std::size_t width) {
  std::uint32_t v = 0;
  const std::uint8_t* p = raw.data() + index * width;
  for (std::size_t b = 0; b < width; ++b) v |= std::uint32_t{p[b]} << (8 * b);
  return v;
}

std::int64_t sign_extend(std::uint32_t v, unsigned bits) {
  const std::uint64_t m = std::uint64_t{1} << (bits - 1);
  const std::uint64_t x = v & low_mask(bits);
  return static_cast<std::int64_t>(x ^ m) - static_cast<std::int64_t>(m);
}

template <typename T>
const T& mapping_as(std::span<const Mapping> code_map, std::uint32_t code) {
  if (code >= code_map.size()) throw Error(ErrorKind::Alphabet, "code " + std::to_string(code) + " not in model");
  auto* m = std::get_if<T>(&code_map[code]);
  if (!m) throw Error(ErrorKind::Mapping, "code " + std::to_string(code) + " has the wrong mapping kind");
  return *m;
}

std::vector<std::int8_t> load_weights(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  std::vector<std::int8_t> w(desc.element_count);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<std::int8_t>(raw[i]);
  return w;
}

KeyedPairs float_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  const FloatFormat& f = desc.float_format;
  const auto keys = static_cast<int>(f.max_exp_field()) + 1;
  KeyedPairs kp;
  kp.payload_bits.assign(static_cast<std::size_t>(keys), static_cast<std::uint8_t>(f.payload_bits()));
  for (int k = 0; k < keys; ++k) kp.mappings.emplace_back(Exponent{k, false});
  const ExponentMap identity = ExponentMap::identity(0, keys - 1);
  const std::size_t width = desc.element_bytes();
  kp.pairs.resize(desc.element_count);
  for (std::size_t i = 0; i < kp.pairs.size(); ++i) {
    const std::uint32_t pattern = load(raw, i, width);
    if (f.total_bits() < 32 && (pattern >> f.total_bits()))
      throw Error(ErrorKind::Contract, "element wider than the float format", i);
    kp.pairs[i] = pattern_to_pair(pattern, f, identity);
  }
  return kp;
}

KeyedPairs posit_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  const PositFormat& f = desc.posit_format;
  const int m = posit_max_scale(f);
  PositCodes codes;
  codes.scale_to_code = ExponentMap(-m, m);
  for (int s = -m; s <= m; ++s) codes.scale_to_code.set(s, static_cast<std::uint32_t>(s + m));
  codes.zero_code = static_cast<std::uint32_t>(2 * m + 1);
  codes.nar_code = static_cast<std::uint32_t>(2 * m + 2);

  KeyedPairs kp;
  for (int s = -m; s <= m; ++s) {
    kp.payload_bits.push_back(static_cast<std::uint8_t>(1 + posit_fraction_bits(s, f)));
    kp.mappings.emplace_back(Exponent{s, false});
  }
  kp.payload_bits.insert(kp.payload_bits.end(), {0, 0});
  kp.mappings.emplace_back(DirectValue{0, f.n});
  kp.mappings.emplace_back(DirectValue{posit_nar(f), f.n});

  const std::size_t width = desc.element_bytes();
  kp.pairs.resize(desc.element_count);
  for (std::size_t i = 0; i < kp.pairs.size(); ++i) {
    const std::uint32_t pattern = load(raw, i, width);
    if (f.n < 32 && (pattern >> f.n)) throw Error(ErrorKind::Contract, "element wider than the posit format", i);
    kp.pairs[i] = posit_to_pair(pattern, f, codes);
  }
  return kp;
}

KeyedPairs integer_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  KeyedPairs kp;
  std::optional<unsigned> cap;
  if (desc.max_payload) cap = *desc.max_payload;
  for (std::uint32_t k = 0; k < kIntCodes; ++k) {
    kp.payload_bits.push_back(static_cast<std::uint8_t>(int_payload_bits(k, cap)));
    kp.mappings.emplace_back(IntMagnitude{static_cast<std::int32_t>(k)});
  }
  const std::size_t width = desc.element_bytes();
  kp.pairs.resize(desc.element_count);
  for (std::size_t i = 0; i < kp.pairs.size(); ++i) {
    const std::int64_t v = sign_extend(load(raw, i, width), desc.int_bits);
    if (v <= -(std::int64_t{1} << 31)) throw Error(ErrorKind::Contract, "integer magnitude too large", i);
    kp.pairs[i] = int_to_pair(v, cap);
  }
  return kp;
}

KeyedPairs run_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  KeyedPairs kp;
  for (std::uint32_t k = 0; k < kRunCodes; ++k) {
    kp.payload_bits.push_back(static_cast<std::uint8_t>(run_payload_bits(k, desc.binary)));
    kp.mappings.emplace_back(RunLength{k == kTrailingRunCode ? -1 : static_cast<std::int32_t>(k)});
  }
  for (const auto& r : ternary_to_runs(load_weights(desc, raw), desc.binary))
    kp.pairs.push_back(run_to_pair(r, desc.binary));
  return kp;
}

KeyedPairs group_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw) {
  KeyedPairs kp;
  for (unsigned m = 0; m < 256; ++m) {
    kp.payload_bits.push_back(static_cast<std::uint8_t>(desc.binary ? 0 : std::popcount(m)));
    kp.mappings.emplace_back(GroupMask{static_cast<std::uint8_t>(m)});
  }
  kp.pairs = ternary_to_groups(load_weights(desc, raw), desc.binary);
  return kp;
}

KeyedPairs direct_keys(const FormatDescriptor& desc, std::span<const std::uint8_t> raw, const EncodeOptions& options) {
  const std::size_t width = desc.element_bytes();
  auto key_value = [&](std::size_t i) -> std::uint32_t {
    const std::uint32_t v = load(raw, i, width);
    if (!desc.sign_magnitude) return v;
    const std::int64_t s = sign_extend(v, desc.int_bits);
    return static_cast<std::uint32_t>(s < 0 ? -s : s);
  };

  std::vector<std::uint32_t> values;
  if (options.direct_values) {
    values = *options.direct_values;
  } else {
    for (std::size_t i = 0; i < desc.element_count; ++i) values.push_back(key_value(i));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
  }
  const DirectValueMap map(values);

  KeyedPairs kp;
  for (std::uint32_t v : values) {
    kp.payload_bits.push_back(desc.sign_magnitude && v != 0 ? 1 : 0);
    kp.mappings.emplace_back(DirectValue{v, desc.int_bits});
  }
  kp.pairs.resize(desc.element_count);
  for (std::size_t i = 0; i < kp.pairs.size(); ++i) {
    try {
      if (desc.sign_magnitude) {
        const auto v = static_cast<std::int32_t>(sign_extend(load(raw, i, width), desc.int_bits));
        kp.pairs[i] = signed_direct_to_pair(v, map);
      } else {
        kp.pairs[i] = direct_to_pair(key_value(i), map);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "value " + std::to_string(key_value(i)) + " has no code", i);
    }
  }
  return kp;
}

}  // namespace

const char* to_string(FormatKind kind) {
  switch (kind) {
    case FormatKind::Pairs: return "pairs";
    case FormatKind::Float: return "float";
    case FormatKind::Posit: return "posit";
    case FormatKind::Integer: return "int";
    case FormatKind::TernaryRuns: return "ternary-runs";
    case FormatKind::TernaryGroups: return "ternary-groups";
    case FormatKind::Direct: return "direct";
  }
  return "unknown";
}

std::size_t FormatDescriptor::element_bytes() const {
  switch (kind) {
    case FormatKind::Float: return (float_format.total_bits() + 7) / 8;
    case FormatKind::Posit: return (posit_format.n + 7u) / 8;
    case FormatKind::Integer:
    case FormatKind::Direct: return int_bits / 8u;
    case FormatKind::TernaryRuns:
    case FormatKind::TernaryGroups: return 1;
    case FormatKind::Pairs: return 0;
  }
  return 0;
}

void validate(const FormatDescriptor& desc) {
  switch (desc.kind) {
    case FormatKind::Float: validate(desc.float_format); break;
    case FormatKind::Posit: validate(desc.posit_format); break;
    case FormatKind::Integer:
    case FormatKind::Direct:
      if (desc.int_bits != 8 && desc.int_bits != 16 && desc.int_bits != 32)
        throw Error(ErrorKind::Contract, "integer width must be 8, 16 or 32 bits");
      if (desc.max_payload && (*desc.max_payload < 1 || *desc.max_payload > 32))
        throw Error(ErrorKind::Contract, "payload cap must be 1..32 bits");
      break;
    default: break;
  }
}

KeyedPairs to_keyed_pairs(const FormatDescriptor& desc, std::span<const std::uint8_t> raw,
                          const EncodeOptions& options) {
  validate(desc);
  if (desc.kind == FormatKind::Pairs) throw Error(ErrorKind::Usage, "opaque pair streams have no element layer");
  if (raw.size() != desc.raw_bytes())
    throw Error(ErrorKind::Contract, "input holds " + std::to_string(raw.size()) + " bytes, expected " +
                                         std::to_string(desc.raw_bytes()));
  switch (desc.kind) {
    case FormatKind::Float: return float_keys(desc, raw);
    case FormatKind::Posit: return posit_keys(desc, raw);
    case FormatKind::Integer: return integer_keys(desc, raw);
    case FormatKind::TernaryRuns: return run_keys(desc, raw);
    case FormatKind::TernaryGroups: return group_keys(desc, raw);
    case FormatKind::Direct: return direct_keys(desc, raw, options);
    case FormatKind::Pairs: break;
  }
  throw Error(ErrorKind::Usage, "unknown format kind");
}

BuiltModel build_model(const KeyedPairs& keys, std::span<const CodingPair> pairs, unsigned precision_bits) {
  const FrequencyTable freq = count_codes(pairs, keys.key_space());
  BuiltModel out;
  out.model = normalize_counts(freq, precision_bits);
  out.key_to_code = key_to_code(freq);
  for (std::size_t k = 0; k < keys.key_space(); ++k) {
    const std::int32_t c = out.key_to_code[k];
    if (c >= 0) out.model.describe(static_cast<std::size_t>(c), keys.payload_bits[k], keys.mappings[k]);
  }
  return out;
}

void remap_keys(std::span<CodingPair> pairs, std::span<const std::int32_t> key_to_code) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::uint32_t key = pairs[i].code;
    if (key >= key_to_code.size() || key_to_code[key] < 0)
      throw Error(ErrorKind::Alphabet, "key " + std::to_string(key) + " has no code", i);
    pairs[i].code = static_cast<std::uint32_t>(key_to_code[key]);
  }
}

EncodedTensor encode_tensor(const FormatDescriptor& desc, std::span<const std::uint8_t> raw, unsigned precision_bits,
                            const EncodeOptions& options) {
  KeyedPairs keys = to_keyed_pairs(desc, raw, options);
  if (keys.pairs.empty()) return {ProbabilityModel(precision_bits, {}), {}};
  BuiltModel built = build_model(keys, keys.pairs, precision_bits);
  remap_keys(keys.pairs, built.key_to_code);
  return {std::move(built.model), std::move(keys.pairs)};
}

ElementDecoder::ElementDecoder(const FormatDescriptor& desc) : desc_(desc), width_(desc.element_bytes()) {
  validate(desc_);
  if (desc_.kind == FormatKind::Pairs) throw Error(ErrorKind::Usage, "opaque pair streams have no element layer");
}

void ElementDecoder::emit(std::uint64_t value, std::vector<std::uint8_t>& out) {
  if (produced_ >= desc_.element_count)
    throw Error(ErrorKind::Corruption, "pairs produce more than the declared elements", pairs_ - 1);
  for (std::size_t b = 0; b < width_; ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
  ++produced_;
}

void ElementDecoder::put(const CodingPair& pair, std::span<const Mapping> code_map, std::vector<std::uint8_t>& out) {
  ++pairs_;
  if (trailing_seen_) throw Error(ErrorKind::Corruption, "pair after the trailing run", pairs_ - 1);
  switch (desc_.kind) {
    case FormatKind::Float:
      emit(pair_to_pattern(pair, desc_.float_format, code_map), out);
      break;
    case FormatKind::Posit:
      emit(pair_to_posit(pair, desc_.posit_format, code_map), out);
      break;
    case FormatKind::Integer: {
      CodingPair q = pair;
      q.code = static_cast<std::uint32_t>(mapping_as<IntMagnitude>(code_map, pair.code).k);
      std::int64_t v = pair_to_int(q);
      const std::int64_t hi = (std::int64_t{1} << (desc_.int_bits - 1)) - 1;
      v = std::clamp(v, -hi - 1, hi);  // capped payloads may round past the element range
      emit(static_cast<std::uint64_t>(v), out);
      break;
    }
    case FormatKind::TernaryRuns: {
      const std::int32_t c = mapping_as<RunLength>(code_map, pair.code).magnitude_class;
      CodingPair q = pair;
      q.code = c < 0 ? kTrailingRunCode : static_cast<std::uint32_t>(c);
      TernaryRun r = pair_to_run(q, desc_.binary);
      if (r.trailing) {
        if (produced_ >= desc_.element_count) throw Error(ErrorKind::Corruption, "empty trailing run", pairs_ - 1);
        r.zero_run = desc_.element_count - produced_;
        trailing_seen_ = true;
      }
      if (r.zero_run + (r.trailing ? 0 : 1) > desc_.element_count - produced_)
        throw Error(ErrorKind::Corruption, "run overflows the declared elements", pairs_ - 1);
      for (std::uint64_t z = 0; z < r.zero_run; ++z) emit(0, out);
      if (!r.trailing) emit(static_cast<std::uint8_t>(r.terminal_sign.value_or(1)), out);
      break;
    }
    case FormatKind::TernaryGroups: {
      CodingPair q = pair;
      q.code = mapping_as<GroupMask>(code_map, pair.code).mask;
      if (produced_ >= desc_.element_count)
        throw Error(ErrorKind::Corruption, "pairs produce more than the declared elements", pairs_ - 1);
      const std::uint64_t n = std::min<std::uint64_t>(kGroupSize, desc_.element_count - produced_);
      for (std::int8_t w : groups_to_ternary(std::span(&q, 1), desc_.binary, n))
        emit(static_cast<std::uint8_t>(w), out);
      break;
    }
    case FormatKind::Direct:
      if (desc_.sign_magnitude) {
        emit(static_cast<std::uint32_t>(pair_to_signed_direct(pair, code_map)), out);
      } else {
        emit(pair_to_direct(pair, code_map), out);
      }
      break;
    case FormatKind::Pairs:
      break;
  }
}

void ElementDecoder::finish() const {
  if (produced_ != desc_.element_count)
    throw Error(ErrorKind::Corruption, "decoded " + std::to_string(produced_) + " of " +
                                           std::to_string(desc_.element_count) + " elements");
}

std::vector<std::uint8_t> decode_tensor(const FormatDescriptor& desc, std::span<const Mapping> code_map,
                                        std::span<const CodingPair> pairs) {
  ElementDecoder dec(desc);
  std::vector<std::uint8_t> out;
  out.reserve(desc.raw_bytes());
  for (const auto& p : pairs) dec.put(p, code_map, out);
  dec.finish();
  return out;
}

}  // namespace cpc
