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

#include "cpc/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <exception>
#include <string>
#include <thread>

#include "cpc/bytes.hpp"
#include "cpc/rans.hpp"
#include "cpc/tans.hpp"

namespace cpc {

const char* to_string(CoderKind kind) {
  switch (kind) {
    case CoderKind::Rans16: return "rans16";
    case CoderKind::Tans8: return "tans8";
  }
  return "unknown";
}

unsigned precision_of(CoderKind kind) { return kind == CoderKind::Tans8 ? 8 : 16; }
unsigned word_bits_of(CoderKind kind) { return kind == CoderKind::Tans8 ? 16 : 32; }

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'P', 'C', '1'};
constexpr std::uint8_t kFlagCrc = 1;
constexpr std::uint8_t kFlagDynamic = 2;
constexpr std::uint8_t kFlagIndexed = 4;
constexpr std::size_t kFixedHeaderBytes = 16;
constexpr std::size_t kCursorBytes = 17;

enum Tag : std::uint8_t {
  kTagEnd = 0,
  kTagKind = 1,
  kTagElements = 2,
  kTagFloat = 3,
  kTagPosit = 4,
  kTagInteger = 5,
  kTagTernary = 6,
  kTagScale = 7,
  kTagBlock = 8,
};

std::uint32_t crc_update(std::uint32_t crc, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const auto step = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = static_cast<std::uint32_t>(::crc32(crc, data, step));
    data += step;
    n -= step;
  }
  return crc;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) { return crc_update(0, bytes.data(), bytes.size()); }

std::uint64_t lane_pairs(std::uint64_t total, unsigned lanes, unsigned lane) {
  return (total + lanes - 1 - lane) / lanes;
}

// Pairs of lane `lane` already decoded once the reader stands at `index`.
std::uint64_t lane_done(std::uint64_t index, unsigned lanes, unsigned lane) { return lane_pairs(index, lanes, lane); }

struct RansKind {
  using Encoder = RansEncoder;
  using Tables = RansTables;
  using Word = std::uint32_t;
  template <typename S>
  using Decoder = RansDecoder<S>;
  static constexpr std::uint64_t kInitial = RansEncoder::kLowerBound;
};

struct TansKind {
  using Encoder = TansEncoder;
  using Tables = TansTables;
  using Word = std::uint16_t;
  template <typename S>
  using Decoder = TansDecoder<S>;
  static constexpr std::uint64_t kInitial = TansEncoder::kInitialState;
};

std::uint64_t initial_state(CoderKind coder) {
  return coder == CoderKind::Tans8 ? TansKind::kInitial : RansKind::kInitial;
}

template <typename Word>
std::vector<std::uint8_t> words_to_bytes(const std::vector<Word>& words) {
  std::vector<std::uint8_t> out;
  out.reserve(words.size() * sizeof(Word));
  for (Word w : words)
    for (std::size_t b = 0; b < sizeof(Word); ++b) out.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
  return out;
}

template <typename Word>
std::vector<Word> bytes_to_words(std::span<const std::uint8_t> bytes) {
  std::vector<Word> out(bytes.size() / sizeof(Word));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Word w = 0;
    for (std::size_t b = 0; b < sizeof(Word); ++b) w |= static_cast<Word>(Word{bytes[i * sizeof(Word) + b]} << (8 * b));
    out[i] = w;
  }
  return out;
}

struct EncodedLane {
  std::vector<std::uint8_t> bytes;
  std::vector<CoderCursor> cursors;  // one per requested local index
};

// Encodes every `stride`-th pair starting at `first` back to front. `marks`
// lists ascending local indices whose decoder cursor should be recorded.
template <typename K>
EncodedLane encode_lane(typename K::Encoder enc, std::span<const CodingPair> pairs, std::size_t first,
                        std::size_t stride, std::span<const std::uint64_t> marks) {
  EncodedLane out;
  const std::uint64_t n = pairs.size() > first ? (pairs.size() - first + stride - 1) / stride : 0;
  if (n == 0 && enc.pair_count() == 0) {
    out.cursors.assign(marks.size(), CoderCursor{0, 0, K::kInitial});
    return out;
  }
  struct Snap {
    std::uint64_t state, bits;
  };
  std::vector<Snap> snaps(marks.size());
  std::size_t m = marks.size();
  auto take = [&](std::uint64_t local) {
    while (m > 0 && marks[m - 1] == local) snaps[--m] = {enc.state(), enc.bits_pushed()};
  };
  take(n);
  for (std::uint64_t i = n; i-- > 0;) {
    enc.encode_unchecked(pairs[first + i * stride]);
    take(i);
  }
  const auto payload = enc.flush();
  const unsigned wbits = sizeof(typename K::Word) * 8;
  const std::uint64_t total = payload.words.size() * std::uint64_t{wbits};
  out.cursors.resize(marks.size());
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const std::uint64_t consumed = total - snaps[i].bits;
    out.cursors[i] = {consumed / wbits, static_cast<std::uint32_t>(consumed % wbits), snaps[i].state};
  }
  out.bytes = words_to_bytes(payload.words);
  return out;
}

template <typename K>
std::vector<EncodedLane> encode_lanes(const ProbabilityModel& model, std::span<const CodingPair> pairs, unsigned lanes,
                                      const std::vector<std::vector<std::uint64_t>>& marks, bool parallel) {
  std::vector<EncodedLane> out(lanes);
  if (pairs.empty()) {
    for (unsigned l = 0; l < lanes; ++l) out[l].cursors.assign(marks[l].size(), CoderCursor{0, 0, K::kInitial});
    return out;
  }
  const auto tables = std::make_shared<const typename K::Tables>(model);
  auto run = [&](unsigned l) { out[l] = encode_lane<K>(typename K::Encoder(tables), pairs, l, lanes, marks[l]); };
  if (!parallel || lanes == 1) {
    for (unsigned l = 0; l < lanes; ++l) run(l);
    return out;
  }
  std::vector<std::exception_ptr> errors(lanes);
  std::vector<std::thread> threads;
  threads.reserve(lanes);
  for (unsigned l = 0; l < lanes; ++l)
    threads.emplace_back([&, l] {
      try {
        run(l);
      } catch (...) {
        errors[l] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<EncodedLane> encode_lanes(CoderKind coder, const ProbabilityModel& model, std::span<const CodingPair> pairs,
                                      unsigned lanes, const std::vector<std::vector<std::uint64_t>>& marks,
                                      bool parallel) {
  if (coder == CoderKind::Tans8) return encode_lanes<TansKind>(model, pairs, lanes, marks, parallel);
  return encode_lanes<RansKind>(model, pairs, lanes, marks, parallel);
}

void check_pairs(const ProbabilityModel& model, std::span<const CodingPair> pairs, std::uint64_t base = 0) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const CodingPair& p = pairs[i];
    if (p.code >= model.size())
      throw Error(ErrorKind::Alphabet, "pair code " + std::to_string(p.code) + " not in model", base + i);
    if (p.payload_len != model[p.code].payload_bits || !payload_is_clean(p))
      throw Error(ErrorKind::Contract, "pair payload does not match its code", base + i);
  }
}

void check_options(const WriteOptions& o) {
  if (o.coder != CoderKind::Rans16 && o.coder != CoderKind::Tans8) throw Error(ErrorKind::Contract, "unknown coder");
  if (o.lanes < 1 || o.lanes > kMaxLanes) throw Error(ErrorKind::Contract, "lane count must be 1..255");
}

void check_model(const ProbabilityModel& model, CoderKind coder) {
  if (model.precision_bits() != precision_of(coder))
    throw Error(ErrorKind::Precision, std::string("model precision does not match coder ") + to_string(coder));
  detail::require_valid(model);
}

void write_descriptor(ByteWriter& w, const FormatDescriptor& d, std::uint32_t block_length) {
  auto tlv = [&](std::uint8_t tag, const ByteWriter& body) {
    w.u8(tag);
    w.u16(static_cast<std::uint16_t>(body.size()));
    w.bytes(body.data());
  };
  ByteWriter b;
  b.u8(static_cast<std::uint8_t>(d.kind));
  tlv(kTagKind, b);
  b = {};
  b.u64(d.element_count);
  tlv(kTagElements, b);
  switch (d.kind) {
    case FormatKind::Float:
      b = {};
      b.u8(d.float_format.exp_bits);
      b.u8(d.float_format.mant_bits);
      b.u8(d.float_format.has_sign ? 1 : 0);
      b.i16(static_cast<std::int16_t>(d.float_format.exp_bias));
      tlv(kTagFloat, b);
      break;
    case FormatKind::Posit:
      b = {};
      b.u8(static_cast<std::uint8_t>(d.posit_format.n));
      b.u8(static_cast<std::uint8_t>(d.posit_format.es));
      tlv(kTagPosit, b);
      break;
    case FormatKind::Integer:
    case FormatKind::Direct:
      b = {};
      b.u8(d.int_bits);
      b.u8(d.max_payload.value_or(0));
      b.u8(d.sign_magnitude ? 1 : 0);
      tlv(kTagInteger, b);
      break;
    case FormatKind::TernaryRuns:
    case FormatKind::TernaryGroups:
      b = {};
      b.u8(d.binary ? 1 : 0);
      tlv(kTagTernary, b);
      break;
    case FormatKind::Pairs:
      break;
  }
  if (d.quant_scale) {
    b = {};
    b.f64(*d.quant_scale);
    tlv(kTagScale, b);
  }
  if (block_length) {
    b = {};
    b.u32(block_length);
    tlv(kTagBlock, b);
  }
  w.u8(kTagEnd);
}

// Header bytes from the magic through the lane length table.
std::vector<std::uint8_t> header_prefix(const StreamHeader& h) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u8(h.version);
  w.u8(static_cast<std::uint8_t>(h.coder));
  w.u8(static_cast<std::uint8_t>((h.crc ? kFlagCrc : 0) | (h.dynamic ? kFlagDynamic : 0) |
                                 (h.indexed ? kFlagIndexed : 0)));
  w.u8(static_cast<std::uint8_t>(h.lanes));
  w.u64(h.pair_count);
  write_descriptor(w, h.format, h.block_length);
  write_model_table(w, h.model);
  for (std::uint64_t b : h.lane_bytes) w.u64(b);
  return w.take();
}

std::vector<std::uint8_t> checkpoint_index(const StreamHeader& h) {
  ByteWriter w;
  w.u32(h.checkpoint_stride);
  w.u32(static_cast<std::uint32_t>(h.checkpoints.size()));
  for (const auto& cp : h.checkpoints) {
    w.u64(cp.pair_index);
    for (const auto& c : cp.lanes) {
      w.u64(c.word_offset);
      w.u8(static_cast<std::uint8_t>(c.bit_offset));
      w.u64(c.state);
    }
  }
  return w.take();
}

class Sink {
 public:
  explicit Sink(std::ostream& out) : out_(out) {}

  void put(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return;
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw Error(ErrorKind::Io, "write failed after " + std::to_string(written_) + " bytes", written_);
    written_ += bytes.size();
  }
  void u32(std::uint32_t v) {
    ByteWriter w;
    w.u32(v);
    put(w.data());
  }
  std::uint64_t finish() {
    out_.flush();
    if (!out_) throw Error(ErrorKind::Io, "flush failed after " + std::to_string(written_) + " bytes", written_);
    return written_;
  }

 private:
  std::ostream& out_;
  std::uint64_t written_ = 0;
};

// Writes a static stream whose lanes are already encoded.
std::uint64_t emit_static(std::ostream& out, StreamHeader& h, const std::vector<EncodedLane>& lanes) {
  h.lane_bytes.clear();
  for (const auto& l : lanes) h.lane_bytes.push_back(l.bytes.size());
  const auto prefix = header_prefix(h);
  h.stream_tag = crc_of(prefix);
  Sink sink(out);
  sink.put(prefix);
  if (h.indexed) sink.put(checkpoint_index(h));
  for (const auto& l : lanes) sink.put(l.bytes);
  if (h.crc)
    for (const auto& l : lanes) sink.u32(crc_of(l.bytes));
  return sink.finish();
}

// ---- reading ----

[[noreturn]] void parse_fail(const std::string& what, std::uint64_t offset) {
  throw Error(ErrorKind::Parse, what, offset);
}

std::vector<std::uint8_t> read_exact(std::istream& in, std::size_t n, std::uint64_t offset, const char* what) {
  std::vector<std::uint8_t> buf(n);
  if (n == 0) return buf;
  in.clear();
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    parse_fail(std::string("unexpected end of data in ") + what, offset + static_cast<std::uint64_t>(in.gcount()));
  return buf;
}

std::optional<std::uint64_t> stream_size(std::istream& in) {
  in.clear();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.clear();
  if (end < 0) return std::nullopt;
  return static_cast<std::uint64_t>(end);
}

FormatDescriptor read_descriptor(std::istream& in, std::uint64_t& offset, std::vector<std::uint8_t>& raw,
                                 std::uint32_t& block_length) {
  FormatDescriptor d;
  const std::uint64_t start = offset;
  bool saw_kind = false;
  for (;;) {
    const auto tag_bytes = read_exact(in, 1, offset, "format descriptor");
    raw.insert(raw.end(), tag_bytes.begin(), tag_bytes.end());
    const std::uint8_t tag = tag_bytes[0];
    ++offset;
    if (tag == kTagEnd) break;
    const auto len_bytes = read_exact(in, 2, offset, "format descriptor");
    raw.insert(raw.end(), len_bytes.begin(), len_bytes.end());
    const std::size_t len = len_bytes[0] | (len_bytes[1] << 8);
    offset += 2;
    const auto body = read_exact(in, len, offset, "format descriptor");
    raw.insert(raw.end(), body.begin(), body.end());
    ByteReader r(body, offset);
    auto need = [&](std::size_t n) {
      if (len < n) parse_fail("descriptor entry too short", offset);
    };
    switch (tag) {
      case kTagKind: {
        need(1);
        const std::uint8_t k = r.u8();
        if (k > static_cast<std::uint8_t>(FormatKind::Direct)) parse_fail("unknown format kind", offset);
        d.kind = static_cast<FormatKind>(k);
        saw_kind = true;
        break;
      }
      case kTagElements:
        need(8);
        d.element_count = r.u64();
        break;
      case kTagFloat:
        need(5);
        d.float_format.exp_bits = r.u8();
        d.float_format.mant_bits = r.u8();
        d.float_format.has_sign = r.u8() != 0;
        d.float_format.exp_bias = r.i16();
        break;
      case kTagPosit:
        need(2);
        d.posit_format.n = r.u8();
        d.posit_format.es = r.u8();
        break;
      case kTagInteger: {
        need(3);
        d.int_bits = r.u8();
        const std::uint8_t cap = r.u8();
        if (cap) d.max_payload = cap;
        d.sign_magnitude = r.u8() != 0;
        break;
      }
      case kTagTernary:
        need(1);
        d.binary = r.u8() != 0;
        break;
      case kTagScale:
        need(8);
        d.quant_scale = r.f64();
        break;
      case kTagBlock:
        need(4);
        block_length = r.u32();
        break;
      default:
        break;  // unknown entries are skipped
    }
    offset += len;
  }
  if (!saw_kind) parse_fail("format descriptor without a kind entry", start);
  try {
    validate(d);
  } catch (const Error& e) {
    parse_fail(std::string("invalid format descriptor: ") + e.what(), start);
  }
  return d;
}

ProbabilityModel read_model(std::istream& in, std::uint64_t& offset, std::vector<std::uint8_t>* raw,
                            unsigned precision) {
  auto count = read_exact(in, 2, offset, "model table");
  const std::size_t n = count[0] | (count[1] << 8);
  auto body = read_exact(in, n * 8, offset + 2, "model table");
  count.insert(count.end(), body.begin(), body.end());
  if (raw) raw->insert(raw->end(), count.begin(), count.end());
  ByteReader r(count, offset);
  ProbabilityModel model = read_model_table(r, precision);
  if (!model.empty()) {
    const auto violations = validate_model(model);
    if (!violations.empty()) parse_fail("invalid model table: " + violations.front().message, offset);
  }
  offset += count.size();
  return model;
}

StreamHeader parse_header(std::istream& in) {
  StreamHeader h;
  std::vector<std::uint8_t> raw = read_exact(in, kFixedHeaderBytes, 0, "header");
  if (!std::equal(raw.begin(), raw.begin() + 4, kMagic)) parse_fail("bad magic", 0);
  ByteReader r(raw);
  r.bytes(4);
  h.version = r.u8();
  if (h.version != kContainerVersion) parse_fail("unsupported version " + std::to_string(h.version), 4);
  const std::uint8_t coder = r.u8();
  if (coder != 1 && coder != 2) parse_fail("unknown coder kind " + std::to_string(coder), 5);
  h.coder = static_cast<CoderKind>(coder);
  const std::uint8_t flags = r.u8();
  if (flags & ~(kFlagCrc | kFlagDynamic | kFlagIndexed)) parse_fail("unknown flag bits", 6);
  h.crc = flags & kFlagCrc;
  h.dynamic = flags & kFlagDynamic;
  h.indexed = flags & kFlagIndexed;
  if (h.dynamic && h.indexed) parse_fail("dynamic streams carry no checkpoint index", 6);
  h.lanes = r.u8();
  if (h.lanes == 0) parse_fail("lane count is zero", 7);
  h.pair_count = r.u64();

  std::uint64_t offset = kFixedHeaderBytes;
  h.format = read_descriptor(in, offset, raw, h.block_length);
  if (h.dynamic && h.block_length == 0) parse_fail("dynamic stream without a block length", offset);

  const std::uint64_t model_at = offset;
  h.model = read_model(in, offset, &raw, precision_of(h.coder));
  if (h.dynamic && !h.model.empty()) parse_fail("dynamic stream with a static model", model_at);
  if (!h.dynamic && h.pair_count > 0 && h.model.empty()) parse_fail("missing model table", model_at);

  const auto lengths = read_exact(in, 8 * std::size_t{h.lanes}, offset, "lane length table");
  raw.insert(raw.end(), lengths.begin(), lengths.end());
  ByteReader lr(lengths, offset);
  const unsigned word_bytes = word_bits_of(h.coder) / 8;
  for (unsigned l = 0; l < h.lanes; ++l) {
    const std::uint64_t at = lr.offset();
    h.lane_bytes.push_back(lr.u64());
    if (h.lane_bytes.back() % word_bytes) parse_fail("lane " + std::to_string(l) + " length is not whole words", at);
  }
  offset += lengths.size();
  h.stream_tag = crc_of(raw);

  if (h.indexed) {
    const auto head = read_exact(in, 8, offset, "checkpoint index");
    ByteReader ir(head, offset);
    h.checkpoint_stride = ir.u32();
    const std::uint32_t count = ir.u32();
    offset += 8;
    const std::size_t entry = 8 + kCursorBytes * h.lanes;
    const auto body = read_exact(in, entry * count, offset, "checkpoint index");
    ByteReader br(body, offset);
    h.checkpoints.resize(count);
    for (auto& cp : h.checkpoints) {
      cp.pair_index = br.u64();
      if (cp.pair_index > h.pair_count) parse_fail("checkpoint beyond the last pair", br.offset() - 8);
      cp.stream_tag = h.stream_tag;
      cp.lanes.resize(h.lanes);
      for (auto& c : cp.lanes) {
        c.word_offset = br.u64();
        c.bit_offset = br.u8();
        c.state = br.u64();
      }
    }
    offset += body.size();
  }
  h.payload_offset = offset;
  return h;
}

}  // namespace

// ---- writing ----

std::uint64_t write_stream(std::ostream& out, const ProbabilityModel& model, std::span<const CodingPair> pairs,
                           const FormatDescriptor& format, const WriteOptions& options) {
  check_options(options);
  validate(format);
  if (!pairs.empty() || !model.empty()) check_model(model, options.coder);
  check_pairs(model, pairs);

  StreamHeader h;
  h.coder = options.coder;
  h.crc = options.crc;
  h.lanes = options.lanes;
  h.pair_count = pairs.size();
  h.format = format;
  h.model = model;
  h.indexed = options.checkpoint_stride > 0;
  h.checkpoint_stride = options.checkpoint_stride;

  std::vector<std::uint64_t> indices;
  if (h.indexed) {
    std::uint64_t k = 0;
    do {
      indices.push_back(k);
      k += options.checkpoint_stride;
    } while (k < pairs.size());
  }
  std::vector<std::vector<std::uint64_t>> marks(h.lanes);
  for (unsigned l = 0; l < h.lanes; ++l)
    for (std::uint64_t k : indices) marks[l].push_back(lane_done(k, h.lanes, l));

  const auto lanes = encode_lanes(h.coder, model, pairs, h.lanes, marks, true);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    Checkpoint cp;
    cp.pair_index = indices[i];
    for (unsigned l = 0; l < h.lanes; ++l) cp.lanes.push_back(lanes[l].cursors[i]);
    h.checkpoints.push_back(std::move(cp));
  }
  return emit_static(out, h, lanes);
}

std::uint64_t write_blocks_dynamic(std::ostream& out, const KeyedPairs& keys, std::uint32_t block_len,
                                   const FormatDescriptor& format, const WriteOptions& options) {
  check_options(options);
  validate(format);
  if (block_len < 1) throw Error(ErrorKind::Contract, "block length must be at least 1");
  if (options.checkpoint_stride) throw Error(ErrorKind::Contract, "checkpoints need a static model");
  for (std::size_t i = 0; i < keys.pairs.size(); ++i) {
    const CodingPair& p = keys.pairs[i];
    if (p.code >= keys.key_space()) throw Error(ErrorKind::Alphabet, "pair key outside the key space", i);
    if (p.payload_len != keys.payload_bits[p.code] || !payload_is_clean(p))
      throw Error(ErrorKind::Contract, "pair payload does not match its key", i);
  }

  StreamHeader h;
  h.coder = options.coder;
  h.crc = options.crc;
  h.dynamic = true;
  h.lanes = options.lanes;
  h.pair_count = keys.pairs.size();
  h.format = format;
  h.block_length = block_len;
  h.model = ProbabilityModel(precision_of(options.coder), {});
  h.lane_bytes.assign(h.lanes, 0);

  // Lane totals precede the blocks, so every block is encoded before anything
  // is written.
  std::vector<std::vector<std::uint8_t>> records;
  std::vector<std::uint32_t> lane_crc(h.lanes, 0);
  const std::vector<std::vector<std::uint64_t>> no_marks(h.lanes);
  const unsigned precision = precision_of(options.coder);
  for (std::size_t start = 0; start < keys.pairs.size(); start += block_len) {
    const std::size_t n = std::min<std::size_t>(block_len, keys.pairs.size() - start);
    std::vector<CodingPair> block(keys.pairs.begin() + static_cast<std::ptrdiff_t>(start),
                                  keys.pairs.begin() + static_cast<std::ptrdiff_t>(start + n));
    BuiltModel built = build_model(keys, block, precision);
    remap_keys(block, built.key_to_code);
    const auto lanes = encode_lanes(h.coder, built.model, block, h.lanes, no_marks, false);
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(n));
    write_model_table(w, built.model);
    for (const auto& l : lanes) w.u64(l.bytes.size());
    for (unsigned l = 0; l < h.lanes; ++l) {
      w.bytes(lanes[l].bytes);
      h.lane_bytes[l] += lanes[l].bytes.size();
      lane_crc[l] = crc_update(lane_crc[l], lanes[l].bytes.data(), lanes[l].bytes.size());
    }
    records.push_back(w.take());
  }

  const auto prefix = header_prefix(h);
  Sink sink(out);
  sink.put(prefix);
  for (const auto& r : records) sink.put(r);
  if (h.crc)
    for (std::uint32_t c : lane_crc) sink.u32(c);
  return sink.finish();
}

namespace {

template <typename K>
std::vector<EncodedLane> append_lanes(std::istream& old_stream, const StreamHeader& h, const Checkpoint& at,
                                      std::span<const CodingPair> pairs) {
  const auto tables = std::make_shared<const typename K::Tables>(h.model);
  std::vector<EncodedLane> out(h.lanes);
  std::uint64_t lane_at = h.payload_offset;
  for (unsigned l = 0; l < h.lanes; ++l) {
    const auto bytes = read_exact(old_stream, h.lane_bytes[l], lane_at, "lane payload");
    lane_at += h.lane_bytes[l];
    const std::uint64_t old_n = lane_pairs(h.pair_count, h.lanes, l);
    const std::uint64_t retained = old_n - lane_done(at.pair_index, h.lanes, l);
    typename K::Encoder enc(tables);
    if (old_n > 0) {
      LanePayload<typename K::Word> payload{bytes_to_words<typename K::Word>(bytes), old_n};
      enc = K::Encoder::resume(tables, payload, at.lanes[l], retained);
    }
    out[l] = encode_lane<K>(std::move(enc), pairs, l, h.lanes, {});
  }
  return out;
}

}  // namespace

std::uint64_t append_stream(std::istream& old_stream, const Checkpoint& at, std::span<const CodingPair> pairs,
                            std::ostream& out, const std::optional<FormatDescriptor>& format) {
  StreamHeader h = parse_header(old_stream);
  if (h.dynamic) throw Error(ErrorKind::Usage, "cannot append to a dynamic-block stream");
  if (at.stream_tag != h.stream_tag) throw Error(ErrorKind::Staleness, "checkpoint belongs to another stream");
  if (at.lanes.size() != h.lanes) throw Error(ErrorKind::Staleness, "checkpoint lane count differs from the stream");
  if (at.pair_index > h.pair_count) throw Error(ErrorKind::Contract, "checkpoint beyond the last pair", at.pair_index);
  const std::uint64_t L = h.lanes;
  if ((pairs.size() % L + L - at.pair_index % L) % L != 0)
    throw Error(ErrorKind::Contract, "appended pair count must keep retained pairs in their lanes");
  if (format) {
    validate(*format);
  } else if (h.format.kind != FormatKind::Pairs) {
    throw Error(ErrorKind::Contract, "appending to a typed stream needs the new descriptor");
  }
  if (h.model.empty()) throw Error(ErrorKind::Usage, "stream has no model to append with");
  check_pairs(h.model, pairs);

  const auto lanes = h.coder == CoderKind::Tans8 ? append_lanes<TansKind>(old_stream, h, at, pairs)
                                                 : append_lanes<RansKind>(old_stream, h, at, pairs);
  StreamHeader n;
  n.coder = h.coder;
  n.crc = h.crc;
  n.lanes = h.lanes;
  n.pair_count = pairs.size() + h.pair_count - at.pair_index;
  n.format = format ? *format : h.format;
  n.model = h.model;
  return emit_static(out, n, lanes);
}

// ---- reader ----

namespace {

struct LaneIo {
  std::istream* in = nullptr;
  unsigned lane = 0;
  std::uint32_t crc = 0;
  std::uint64_t bytes_read = 0;
  std::size_t buffered = 0;
};

// Reads one lane's byte range [begin, end) in growing chunks, so a resumed
// decoder touches little more than the words it needs.
template <typename Word>
class IstreamWordSource {
 public:
  IstreamWordSource() = default;
  IstreamWordSource(LaneIo* io, std::uint64_t begin, std::uint64_t end) : io_(io), pos_(begin), end_(end) {}

  bool next(Word& w) {
    if (at_ + sizeof(Word) > buf_.size() && !refill()) return false;
    w = 0;
    for (std::size_t b = 0; b < sizeof(Word); ++b) w |= static_cast<Word>(Word{buf_[at_ + b]} << (8 * b));
    at_ += sizeof(Word);
    return true;
  }
  bool exhausted() const { return at_ >= buf_.size() && pos_ >= end_; }

 private:
  bool refill() {
    if (pos_ >= end_) return false;
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk_, end_ - pos_));
    buf_.resize(n);
    std::istream& in = *io_->in;
    in.clear();
    in.seekg(static_cast<std::streamoff>(pos_));
    in.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != n)
      throw Error(ErrorKind::Parse, "lane " + std::to_string(io_->lane) + " truncated", pos_ + got);
    io_->crc = crc_update(io_->crc, buf_.data(), n);
    io_->bytes_read += n;
    io_->buffered = n;
    pos_ += n;
    at_ = 0;
    chunk_ = std::min(chunk_ * 2, StreamReader::kLaneBufferBytes);
    return true;
  }

  LaneIo* io_ = nullptr;
  std::uint64_t pos_ = 0;
  std::uint64_t end_ = 0;
  std::vector<std::uint8_t> buf_;
  std::size_t at_ = 0;
  std::size_t chunk_ = 16;
};

class LaneDecoder {
 public:
  virtual ~LaneDecoder() = default;
  virtual CodingPair decode() = 0;
  virtual CoderCursor cursor() const = 0;
  virtual void finish() const = 0;
};

template <typename Dec>
class LaneDecoderImpl final : public LaneDecoder {
 public:
  explicit LaneDecoderImpl(Dec d) : d_(std::move(d)) {}
  CodingPair decode() override { return d_.decode(); }
  CoderCursor cursor() const override { return d_.cursor(); }
  void finish() const override { d_.finish(); }

 private:
  Dec d_;
};

template <typename K>
std::unique_ptr<LaneDecoder> open_lane(std::shared_ptr<const typename K::Tables> tables, LaneIo* io,
                                       std::uint64_t begin, std::uint64_t end, std::uint64_t pairs,
                                       const CoderCursor* at) {
  using Source = IstreamWordSource<typename K::Word>;
  using Dec = typename K::template Decoder<Source>;
  const std::uint64_t wbytes = sizeof(typename K::Word);
  if (at) {
    if (at->word_offset * wbytes > end - begin || at->bit_offset >= wbytes * 8)
      throw Error(ErrorKind::Corruption, "checkpoint cursor outside lane " + std::to_string(io->lane));
    Source src(io, begin + at->word_offset * wbytes, end);
    return std::make_unique<LaneDecoderImpl<Dec>>(Dec::resume(std::move(tables), std::move(src), *at, pairs));
  }
  return std::make_unique<LaneDecoderImpl<Dec>>(Dec(std::move(tables), Source(io, begin, end), pairs));
}

}  // namespace

struct StreamReader::Lane {
  LaneIo io;
  std::unique_ptr<LaneDecoder> dec;
  std::uint64_t pairs = 0;  // pairs in the current segment
};

StreamHeader read_header(std::istream& in) { return parse_header(in); }

StreamReader::StreamReader(std::istream& in) : in_(in), header_(parse_header(in)) {
  lanes_.resize(header_.lanes);
  for (unsigned l = 0; l < header_.lanes; ++l) {
    lanes_[l] = std::make_unique<Lane>();
    lanes_[l]->io.in = &in_;
    lanes_[l]->io.lane = l;
  }
  if (header_.dynamic) {
    next_block_offset_ = header_.payload_offset;
    if (header_.pair_count > 0) open_block();
  } else {
    open_static();
  }
}

StreamReader::~StreamReader() = default;

void StreamReader::open_static() {
  if (const auto size = stream_size(in_)) {
    std::uint64_t at = header_.payload_offset;
    for (unsigned l = 0; l < header_.lanes; ++l) {
      at += header_.lane_bytes[l];
      if (at > *size)
        throw Error(ErrorKind::Parse, "lane " + std::to_string(l) + " truncated: payload ends at byte " +
                                          std::to_string(at) + " of " + std::to_string(*size), *size);
    }
    if (header_.crc && at + 4 * header_.lanes > *size) throw Error(ErrorKind::Parse, "checksum table truncated", *size);
  }
  code_map_ = header_.model.code_map();
  std::shared_ptr<const RansTables> rans;
  std::shared_ptr<const TansTables> tans;
  if (header_.pair_count > 0 && header_.coder == CoderKind::Tans8)
    tans = std::make_shared<const TansTables>(header_.model);
  else if (header_.pair_count > 0)
    rans = std::make_shared<const RansTables>(header_.model);
  std::uint64_t begin = header_.payload_offset;
  for (unsigned l = 0; l < header_.lanes; ++l) {
    Lane& lane = *lanes_[l];
    lane.pairs = lane_pairs(header_.pair_count, header_.lanes, l);
    const std::uint64_t end = begin + header_.lane_bytes[l];
    if ((lane.pairs == 0) != (header_.lane_bytes[l] == 0))
      throw Error(ErrorKind::Corruption, "lane " + std::to_string(l) + " length disagrees with its pair count", begin);
    if (lane.pairs > 0) {
      if (tans)
        lane.dec = open_lane<TansKind>(tans, &lane.io, begin, end, lane.pairs, nullptr);
      else
        lane.dec = open_lane<RansKind>(rans, &lane.io, begin, end, lane.pairs, nullptr);
    }
    begin = end;
  }
  next_block_offset_ = begin;
}

void StreamReader::open_block() {
  std::uint64_t offset = next_block_offset_;
  const auto count = read_exact(in_, 4, offset, "block record");
  ByteReader cr(count, offset);
  const std::uint32_t n = cr.u32();
  const std::uint64_t expect = std::min<std::uint64_t>(header_.block_length, header_.pair_count - position_);
  if (n != expect) throw Error(ErrorKind::Corruption, "block holds an unexpected pair count", offset);
  offset += 4;
  const ProbabilityModel model = read_model(in_, offset, nullptr, precision_of(header_.coder));
  if (model.empty()) throw Error(ErrorKind::Parse, "block without a model", offset);
  const auto lengths = read_exact(in_, 8 * std::size_t{header_.lanes}, offset, "block lane lengths");
  ByteReader lr(lengths, offset);
  offset += lengths.size();
  code_map_ = model.code_map();
  block_start_ = position_;
  block_pairs_ = n;

  std::shared_ptr<const RansTables> rans;
  std::shared_ptr<const TansTables> tans;
  if (header_.coder == CoderKind::Tans8)
    tans = std::make_shared<const TansTables>(model);
  else
    rans = std::make_shared<const RansTables>(model);
  const unsigned word_bytes = word_bits_of(header_.coder) / 8;
  for (unsigned l = 0; l < header_.lanes; ++l) {
    Lane& lane = *lanes_[l];
    const std::uint64_t bytes = lr.u64();
    lane.pairs = lane_pairs(n, header_.lanes, l);
    if (bytes % word_bytes || (lane.pairs == 0) != (bytes == 0))
      throw Error(ErrorKind::Corruption, "block segment length invalid for lane " + std::to_string(l), offset);
    lane.dec.reset();
    if (lane.pairs > 0) {
      if (tans)
        lane.dec = open_lane<TansKind>(tans, &lane.io, offset, offset + bytes, lane.pairs, nullptr);
      else
        lane.dec = open_lane<RansKind>(rans, &lane.io, offset, offset + bytes, lane.pairs, nullptr);
    }
    offset += bytes;
  }
  next_block_offset_ = offset;
}

std::optional<CodingPair> StreamReader::next() {
  if (done_) return std::nullopt;
  if (header_.dynamic && position_ == block_start_ + block_pairs_ && position_ < header_.pair_count) {
    for (auto& lane : lanes_)
      if (lane->dec) lane->dec->finish();
    open_block();
  }
  if (position_ >= header_.pair_count) {
    finish_lanes();
    return std::nullopt;
  }
  const std::uint64_t local = header_.dynamic ? position_ - block_start_ : position_;
  Lane& lane = *lanes_[local % header_.lanes];
  const CodingPair p = lane.dec->decode();
  ++position_;
  return p;
}

void StreamReader::finish_lanes() {
  done_ = true;
  for (auto& lane : lanes_)
    if (lane->dec) lane->dec->finish();
  if (header_.dynamic) {
    for (unsigned l = 0; l < header_.lanes; ++l)
      if (lanes_[l]->io.bytes_read != header_.lane_bytes[l])
        throw Error(ErrorKind::Corruption, "lane " + std::to_string(l) + " blocks disagree with the length table",
                    next_block_offset_);
  }
  if (!header_.crc || !verify_crc_) return;
  const std::uint64_t at = next_block_offset_;
  const auto stored = read_exact(in_, 4 * std::size_t{header_.lanes}, at, "checksum table");
  ByteReader r(stored, at);
  for (unsigned l = 0; l < header_.lanes; ++l) {
    const std::uint64_t field = r.offset();
    if (r.u32() != lanes_[l]->io.crc)
      throw Error(ErrorKind::Corruption, "checksum mismatch in lane " + std::to_string(l), field);
  }
}

Checkpoint StreamReader::checkpoint_here() const {
  if (header_.dynamic) throw Error(ErrorKind::Usage, "checkpoints need a static model");
  Checkpoint cp;
  cp.pair_index = position_;
  cp.stream_tag = header_.stream_tag;
  for (const auto& lane : lanes_)
    cp.lanes.push_back(lane->dec ? lane->dec->cursor() : CoderCursor{0, 0, initial_state(header_.coder)});
  return cp;
}

void StreamReader::resume(const Checkpoint& at) {
  if (header_.dynamic) throw Error(ErrorKind::Usage, "checkpoints need a static model");
  if (at.stream_tag != header_.stream_tag) throw Error(ErrorKind::Staleness, "checkpoint belongs to another stream");
  if (at.lanes.size() != header_.lanes)
    throw Error(ErrorKind::Staleness, "checkpoint lane count differs from the stream");
  if (at.pair_index > header_.pair_count)
    throw Error(ErrorKind::Contract, "checkpoint beyond the last pair", at.pair_index);
  std::shared_ptr<const RansTables> rans;
  std::shared_ptr<const TansTables> tans;
  if (header_.pair_count > 0 && header_.coder == CoderKind::Tans8)
    tans = std::make_shared<const TansTables>(header_.model);
  else if (header_.pair_count > 0)
    rans = std::make_shared<const RansTables>(header_.model);
  std::uint64_t begin = header_.payload_offset;
  for (unsigned l = 0; l < header_.lanes; ++l) {
    Lane& lane = *lanes_[l];
    const std::uint64_t end = begin + header_.lane_bytes[l];
    const std::uint64_t remaining = lane.pairs - lane_done(at.pair_index, header_.lanes, l);
    lane.dec.reset();
    lane.io.bytes_read = 0;
    lane.io.buffered = 0;
    if (lane.pairs > 0) {
      if (tans)
        lane.dec = open_lane<TansKind>(tans, &lane.io, begin, end, remaining, &at.lanes[l]);
      else
        lane.dec = open_lane<RansKind>(rans, &lane.io, begin, end, remaining, &at.lanes[l]);
    }
    begin = end;
  }
  position_ = at.pair_index;
  verify_crc_ = false;
  done_ = false;
}

std::size_t StreamReader::buffered_bytes() const {
  std::size_t total = 0;
  for (const auto& lane : lanes_) total += lane->io.buffered;
  return total;
}

std::uint64_t StreamReader::bytes_read() const {
  std::uint64_t total = 0;
  for (const auto& lane : lanes_) total += lane->io.bytes_read;
  return total;
}

std::vector<CodingPair> read_all_pairs(std::istream& in) {
  StreamReader reader(in);
  std::vector<CodingPair> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(reader.header().pair_count, 1u << 26)));
  while (auto p = reader.next()) out.push_back(*p);
  return out;
}

std::vector<std::uint8_t> read_all_elements(std::istream& in) {
  StreamReader reader(in);
  if (reader.header().format.kind == FormatKind::Pairs)
    throw Error(ErrorKind::Usage, "stream carries opaque pairs, not elements");
  ElementDecoder dec(reader.header().format);
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(reader.header().format.raw_bytes(), 1u << 28)));
  while (auto p = reader.next()) dec.put(*p, reader.code_map(), out);
  dec.finish();
  return out;
}

}  // namespace cpc
