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

#include "cli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "cpc/formats/codec.hpp"
#include "cpc/formats/float.hpp"
#include "cpc/quantize.hpp"
#include "cpc/rans.hpp"
#include "cpc/tans.hpp"

namespace cpc::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return kParseError;
    case ErrorKind::Io: return kIoError;
    case ErrorKind::Corruption:
    case ErrorKind::EndOfStream: return kCorruptData;
    case ErrorKind::Alphabet:
    case ErrorKind::Capacity:
    case ErrorKind::EmptyInput:
    case ErrorKind::Contract:
    case ErrorKind::Mapping:
    case ErrorKind::Usage:
    case ErrorKind::Staleness:
    case ErrorKind::Precision:
    case ErrorKind::DegenerateScale: return kContractError;
    case ErrorKind::Model: return kFailure;
  }
  return kFailure;
}

namespace {

// ---- reports ----

std::string num(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

class Report {
 public:
  void add(std::string key, std::string value) { rows_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, std::uint64_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, double value, int decimals = 4) { add(std::move(key), num(value, decimals)); }

  void print(std::ostream& out, bool kv) const {
    std::size_t width = 0;
    for (const auto& r : rows_) width = std::max(width, r.first.size());
    for (const auto& [k, v] : rows_) {
      if (kv)
        out << k << '=' << v << '\n';
      else
        out << k << ':' << std::string(width + 1 - k.size(), ' ') << v << '\n';
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

// ---- files ----

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path);
  return data;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path, 0);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + path);
  return out;
}

std::uint32_t load(std::span<const std::uint8_t> raw, std::size_t i, std::size_t width) {
  std::uint32_t v = 0;
  for (std::size_t b = 0; b < width; ++b) v |= std::uint32_t{raw[i * width + b]} << (8 * b);
  return v;
}

void store(std::vector<std::uint8_t>& raw, std::uint32_t v, std::size_t width) {
  for (std::size_t b = 0; b < width; ++b) raw.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

// ---- format strings ----

unsigned parse_uint(std::string_view s, const std::string& what) {
  unsigned v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw Error(ErrorKind::Usage, "bad number '" + std::string(s) + "' in " + what);
  return v;
}

std::pair<unsigned, unsigned> parse_two(std::string_view s, const std::string& what) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) throw Error(ErrorKind::Usage, what + " needs two numbers: A,B");
  return {parse_uint(s.substr(0, comma), what), parse_uint(s.substr(comma + 1), what)};
}

struct ParsedFormat {
  FormatDescriptor desc;
  std::optional<std::string> direct_file;
};

ParsedFormat parse_format(const std::string& s) {
  ParsedFormat out;
  FormatDescriptor& d = out.desc;
  const auto has_prefix = [&](std::string_view p) { return s.rfind(p, 0) == 0; };
  d.kind = FormatKind::Float;
  if (s == "bf16") {
    d.float_format = FloatFormat::bf16();
  } else if (s == "fp32") {
    d.float_format = FloatFormat::fp32();
  } else if (s == "fp16") {
    d.float_format = FloatFormat::fp16();
  } else if (s == "e8m2") {
    d.float_format = FloatFormat::e8m2();
  } else if (s == "e8m3") {
    d.float_format = FloatFormat::e8m3();
  } else if (has_prefix("float:")) {
    const auto [e, m] = parse_two(std::string_view(s).substr(6), "float:E,M");
    if (e < 1 || e > 8 || m > 23) throw Error(ErrorKind::Usage, "float:E,M needs E in 1..8 and M in 0..23");
    d.float_format = {static_cast<std::uint8_t>(e), static_cast<std::uint8_t>(m), true,
                      static_cast<std::int16_t>((1 << (e - 1)) - 1)};
  } else if (has_prefix("posit:")) {
    d.kind = FormatKind::Posit;
    const auto [n, es] = parse_two(std::string_view(s).substr(6), "posit:N,ES");
    if (n > 32 || es > 4) throw Error(ErrorKind::Usage, "posit:N,ES needs N <= 32 and ES <= 4");
    d.posit_format = {static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(es)};
  } else if (has_prefix("int:")) {
    d.kind = FormatKind::Integer;
    const unsigned bits = parse_uint(std::string_view(s).substr(4), "int:NB");
    if (bits != 8 && bits != 16 && bits != 32) throw Error(ErrorKind::Usage, "int width must be 8, 16 or 32");
    d.int_bits = static_cast<std::uint8_t>(bits);
  } else if (s == "ternary-runs") {
    d.kind = FormatKind::TernaryRuns;
  } else if (s == "ternary-groups") {
    d.kind = FormatKind::TernaryGroups;
  } else if (has_prefix("direct:")) {
    d.kind = FormatKind::Direct;
    out.direct_file = s.substr(7);
    if (out.direct_file->empty()) throw Error(ErrorKind::Usage, "direct: needs a value list file");
  } else {
    throw Error(ErrorKind::Usage, "unknown format '" + s + "'");
  }
  return out;
}

// Whitespace-separated integers, decimal or 0x-prefixed hex; negative values
// are stored as two's complement of the element width.
std::vector<std::uint32_t> read_value_list(const std::string& path, unsigned width_bits) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::uint32_t> values;
  std::string tok;
  std::uint64_t offset = 0;
  while (in >> tok) {
    std::string_view t = tok;
    const bool neg = !t.empty() && t.front() == '-';
    if (neg) t.remove_prefix(1);
    int base = 10;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
      t.remove_prefix(2);
      base = 16;
    }
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v, base);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
      throw Error(ErrorKind::Parse, "bad value '" + tok + "' in " + path, offset);
    const std::uint64_t x = neg ? (~v + 1) : v;
    values.push_back(static_cast<std::uint32_t>(x) & low_mask(width_bits));
    ++offset;
  }
  return values;
}

// ---- input conversion ----

struct InputOptions {
  std::string format = "bf16";
  std::string input = "native";
  bool truncate_bf16 = false;
  bool binary = false;
  bool sign_magnitude = false;
  unsigned element_bits = 16;
  unsigned saturate = 0;
};

struct PreparedInput {
  FormatDescriptor desc;
  std::vector<std::uint8_t> raw;
  EncodeOptions encode;
  std::uint64_t input_bytes = 0;
  std::uint64_t saturated = 0;
  std::uint64_t truncated_nonzero = 0;
};

double source_value(std::span<const std::uint8_t> raw, std::size_t i, const std::string& kind) {
  if (kind == "fp32") return std::bit_cast<float>(load(raw, i, 4));
  if (kind == "bf16") return std::bit_cast<float>(load(raw, i, 2) << 16);
  return format_value(load(raw, i, 2), FloatFormat::fp16());
}

std::size_t source_width(const std::string& kind) { return kind == "fp32" ? 4 : 2; }

PreparedInput prepare(const std::string& path, const InputOptions& o) {
  PreparedInput p;
  ParsedFormat pf = parse_format(o.format);
  p.desc = pf.desc;
  if (o.saturate) {
    if (p.desc.kind != FormatKind::Integer) throw Error(ErrorKind::Usage, "--saturate applies to int formats");
    p.desc.max_payload = static_cast<std::uint8_t>(o.saturate);
  }
  p.desc.binary = o.binary;
  if (p.desc.kind == FormatKind::Direct) {
    p.desc.int_bits = static_cast<std::uint8_t>(o.element_bits);
    p.desc.sign_magnitude = o.sign_magnitude;
    p.encode.direct_values = read_value_list(*pf.direct_file, o.element_bits);
    if (o.sign_magnitude)
      for (auto& v : *p.encode.direct_values) {
        const std::uint32_t sign = std::uint32_t{1} << (o.element_bits - 1);
        if (v & sign) v = (~v + 1) & low_mask(o.element_bits);
      }
    auto& list = *p.encode.direct_values;
    if (o.sign_magnitude) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  }

  std::vector<std::uint8_t> raw = read_file(path);
  p.input_bytes = raw.size();
  std::string input = o.input;
  if (o.truncate_bf16) {
    if (p.desc.kind != FormatKind::Float || !(p.desc.float_format == FloatFormat::bf16()))
      throw Error(ErrorKind::Usage, "--truncate-bf16 needs --format bf16");
    if (input != "native" && input != "fp32") throw Error(ErrorKind::Usage, "--truncate-bf16 reads fp32 input");
    input = "fp32";
  }

  if (input == "native") {
    p.raw = std::move(raw);
  } else {
    if (input != "fp32" && input != "bf16" && input != "fp16") throw Error(ErrorKind::Usage, "unknown input " + input);
    if (p.desc.kind != FormatKind::Float) throw Error(ErrorKind::Usage, "input conversion targets float formats");
    const std::size_t sw = source_width(input);
    if (raw.size() % sw)
      throw Error(ErrorKind::Parse, "input size is not a multiple of " + std::to_string(sw) + " bytes", raw.size());
    const std::size_t n = raw.size() / sw;
    const std::size_t tw = p.desc.element_bytes();
    p.raw.reserve(n * tw);
    for (std::size_t i = 0; i < n; ++i) {
      if (o.truncate_bf16) {
        const std::uint32_t bits = load(raw, i, 4);
        if (bits & 0xFFFFu) ++p.truncated_nonzero;
        store(p.raw, bits >> 16, tw);
        continue;
      }
      const double v = source_value(raw, i, input);
      if (!std::isfinite(v)) throw Error(ErrorKind::Contract, "non-finite input value", i);
      const RoundedFloat r = round_to_format(v, p.desc.float_format);
      p.saturated += r.saturated;
      store(p.raw, r.pattern, tw);
    }
  }
  const std::size_t w = p.desc.element_bytes();
  if (p.raw.size() % w)
    throw Error(ErrorKind::Parse, "input size is not a multiple of the " + std::to_string(w) + "-byte element",
                p.raw.size());
  p.desc.element_count = p.raw.size() / w;
  validate(p.desc);
  return p;
}

CoderKind parse_coder(const std::string& s) { return s == "tans" ? CoderKind::Tans8 : CoderKind::Rans16; }

std::uint64_t payload_bits_of(std::span<const CodingPair> pairs) {
  std::uint64_t total = 0;
  for (const auto& p : pairs) total += p.payload_len;
  return total;
}

double ideal_bits(const KeyedPairs& keys, std::span<const CodingPair> pairs) {
  if (pairs.empty()) return 0.0;
  return entropy_bits(count_codes(pairs, keys.key_space()), keys.payload_bits).total;
}

std::string bin_label(const Mapping& m, std::size_t key) {
  if (const auto* e = std::get_if<Exponent>(&m)) return std::to_string(e->value) + (e->salient ? "s" : "");
  if (const auto* k = std::get_if<IntMagnitude>(&m)) return std::to_string(k->k);
  if (const auto* r = std::get_if<RunLength>(&m))
    return r->magnitude_class < 0 ? "trailing" : std::to_string(r->magnitude_class);
  if (const auto* g = std::get_if<GroupMask>(&m)) return std::to_string(g->mask);
  if (const auto* d = std::get_if<DirectValue>(&m)) return std::to_string(d->bits);
  return std::to_string(key);
}

// ---- commands ----

struct CompressOptions {
  InputOptions input;
  std::string coder = "rans";
  unsigned lanes = 1;
  std::uint32_t dynamic_blocks = 0;
  std::uint32_t checkpoint_stride = 0;
  bool no_crc = false;
  std::string output;
  std::string path;
};

Report compress(const CompressOptions& o) {
  if (o.dynamic_blocks && o.checkpoint_stride)
    throw Error(ErrorKind::Usage, "--checkpoint-stride needs a static model (drop --dynamic-blocks)");
  PreparedInput in = prepare(o.path, o.input);
  KeyedPairs keys = to_keyed_pairs(in.desc, in.raw, in.encode);
  const CoderKind coder = parse_coder(o.coder);
  const std::uint64_t n = keys.pairs.size();
  const double payload = static_cast<double>(payload_bits_of(keys.pairs));

  double ideal = 0.0;
  if (o.dynamic_blocks) {
    for (std::size_t s = 0; s < n; s += o.dynamic_blocks) {
      const std::size_t len = std::min<std::size_t>(o.dynamic_blocks, n - s);
      ideal += ideal_bits(keys, std::span<const CodingPair>(keys.pairs).subspan(s, len));
    }
  } else {
    ideal = ideal_bits(keys, keys.pairs);
  }

  WriteOptions wo{coder, o.lanes, !o.no_crc, o.checkpoint_stride};
  std::ofstream out = open_output(o.output);
  std::uint64_t written = 0;
  if (o.dynamic_blocks) {
    written = write_blocks_dynamic(out, keys, o.dynamic_blocks, in.desc, wo);
  } else {
    ProbabilityModel model(precision_of(coder), {});
    if (n > 0) {
      BuiltModel built = build_model(keys, keys.pairs, precision_of(coder));
      remap_keys(keys.pairs, built.key_to_code);
      model = std::move(built.model);
    }
    written = write_stream(out, model, keys.pairs, in.desc, wo);
  }

  const double original = static_cast<double>(in.raw.size());
  const double elements = static_cast<double>(in.desc.element_count);
  const double per = elements > 0 ? 1.0 / elements : 0.0;
  Report r;
  r.add("format", o.input.format);
  r.add("coder", std::string(to_string(coder)));
  r.add("lanes", std::uint64_t{o.lanes});
  r.add("dynamic_block", std::uint64_t{o.dynamic_blocks});
  r.add("elements", in.desc.element_count);
  r.add("pairs", n);
  r.add("input_bytes", in.input_bytes);
  r.add("original_bytes", static_cast<std::uint64_t>(original));
  r.add("compressed_bytes", written);
  r.add("percent_of_original", original > 0 ? 100.0 * static_cast<double>(written) / original : 0.0);
  r.add("avg_bits_per_weight", 8.0 * static_cast<double>(written) * per);
  r.add("avg_code_bits", (8.0 * static_cast<double>(written) - payload) * per);
  r.add("avg_payload_bits", payload * per);
  r.add("ideal_bits_per_weight", ideal * per);
  r.add("ideal_percent", original > 0 ? 100.0 * ideal / (8.0 * original) : 0.0);
  r.add("saturated", in.saturated);
  if (o.input.truncate_bf16) r.add("truncated_nonzero", in.truncated_nonzero);
  return r;
}

Report analyze(const std::string& path, const InputOptions& o, std::ostream& out, bool kv,
               const std::string& histogram_path) {
  PreparedInput in = prepare(path, o);
  const KeyedPairs keys = to_keyed_pairs(in.desc, in.raw, in.encode);
  const std::uint64_t n = keys.pairs.size();
  const FrequencyTable freq = count_codes(keys.pairs, keys.key_space());
  const std::size_t unique = freq.nonzero();
  const double payload = static_cast<double>(payload_bits_of(keys.pairs));
  const double ideal = ideal_bits(keys, keys.pairs);
  const unsigned simple_code = unique > 1 ? static_cast<unsigned>(std::bit_width(unique - 1)) : 0;
  const double per = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  const double element_bits = 8.0 * static_cast<double>(in.desc.element_bytes());

  std::ostringstream csv;
  csv << "bin,count\n";
  for (std::size_t k = 0; k < freq.counts.size(); ++k)
    if (freq.counts[k]) csv << bin_label(keys.mappings[k], k) << ',' << freq.counts[k] << '\n';
  if (!histogram_path.empty()) {
    const std::string s = csv.str();
    write_file(histogram_path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

  Report r;
  r.add("format", o.format);
  r.add("elements", in.desc.element_count);
  r.add("pairs", n);
  r.add("unique_codes", std::uint64_t{unique});
  r.add("simple_code_bits", std::uint64_t{simple_code});
  r.add("simple_bits_per_weight", static_cast<double>(simple_code) * (n ? 1.0 : 0.0) + payload * per);
  r.add("avg_payload_bits", payload * per);
  r.add("ideal_code_bits", (ideal - payload) * per);
  r.add("ideal_bits_per_weight", ideal * per);
  r.add("ideal_percent", n ? 100.0 * ideal / (element_bits * static_cast<double>(in.desc.element_count)) : 0.0);
  r.add("saturated", in.saturated);
  if (!histogram_path.empty()) {
    r.add("histogram", histogram_path);
  } else if (kv) {
    for (std::size_t k = 0; k < freq.counts.size(); ++k)
      if (freq.counts[k]) r.add("bin." + bin_label(keys.mappings[k], k), freq.counts[k]);
  }
  if (!kv && histogram_path.empty()) {
    r.print(out, false);
    out << '\n' << csv.str();
    return {};
  }
  return r;
}

std::vector<float> read_floats(const std::string& path, const std::string& input) {
  const auto raw = read_file(path);
  const std::string kind = input == "native" ? "fp32" : input;
  if (kind != "fp32" && kind != "bf16" && kind != "fp16") throw Error(ErrorKind::Usage, "unknown input " + input);
  const std::size_t w = source_width(kind);
  if (raw.size() % w) throw Error(ErrorKind::Parse, "input size is not a multiple of " + std::to_string(w), raw.size());
  std::vector<float> out(raw.size() / w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(source_value(raw, i, kind));
  return out;
}

Report quantize(const std::string& path, const std::string& input, unsigned bits, const std::string& coder_name,
                unsigned lanes, const std::string& output) {
  const std::vector<float> weights = read_floats(path, input);
  const Quantized q = quantize_linear(weights, {bits, true});
  FormatDescriptor desc;
  desc.kind = FormatKind::Integer;
  desc.int_bits = 16;
  desc.element_count = q.values.size();
  desc.quant_scale = q.step();
  std::vector<std::uint8_t> raw;
  raw.reserve(2 * q.values.size());
  for (std::int32_t v : q.values) store(raw, static_cast<std::uint32_t>(v), 2);

  const CoderKind coder = parse_coder(coder_name);
  KeyedPairs keys = to_keyed_pairs(desc, raw);
  BuiltModel built = build_model(keys, keys.pairs, precision_of(coder));
  remap_keys(keys.pairs, built.key_to_code);
  std::ofstream out = open_output(output);
  const std::uint64_t written = write_stream(out, built.model, keys.pairs, desc, {coder, lanes});

  const QuantReport ideal = quant_report(q.values, SizeEstimate::Ideal);
  const QuantReport coded = quant_report(q.values, coder == CoderKind::Tans8 ? SizeEstimate::Tans : SizeEstimate::Rans);
  const double n = static_cast<double>(q.values.size());
  Report r;
  r.add("bits", std::uint64_t{bits});
  r.add("coder", std::string(to_string(coder)));
  r.add("elements", q.values.size());
  r.add("max_abs", q.max_abs, 8);
  r.add("step", q.step(), 10);
  r.add("ideal_bits_per_weight", ideal.avg_bits_per_weight);
  r.add("ideal_code_bits", ideal.avg_code_bits);
  r.add("avg_payload_bits", ideal.avg_payload_bits);
  r.add("coded_bits_per_weight", coded.avg_bits_per_weight);
  r.add("compressed_bytes", written);
  r.add("file_bits_per_weight", 8.0 * static_cast<double>(written) / n);
  r.add("percent_of_bf16", coded.compressed_fraction);
  return r;
}

Report decompress(const std::string& path, const std::string& output, bool dequantize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  StreamReader reader(in);
  const FormatDescriptor& desc = reader.header().format;
  if (desc.kind == FormatKind::Pairs) throw Error(ErrorKind::Usage, "stream holds opaque pairs, not a tensor");
  if (dequantize && (desc.kind != FormatKind::Integer || !desc.quant_scale))
    throw Error(ErrorKind::Usage, "--dequantize needs a quantized stream");
  ElementDecoder dec(desc);
  std::vector<std::uint8_t> raw;
  while (auto p = reader.next()) dec.put(*p, reader.code_map(), raw);
  dec.finish();
  if (dequantize) {
    const std::size_t w = desc.element_bytes();
    std::vector<std::uint8_t> floats;
    floats.reserve(desc.element_count * 4);
    for (std::size_t i = 0; i < desc.element_count; ++i) {
      const std::uint32_t v = load(raw, i, w);
      const unsigned bits = desc.int_bits;
      const std::int64_t s = bits == 32 ? static_cast<std::int32_t>(v)
                                        : static_cast<std::int64_t>(v ^ (1u << (bits - 1))) - (1ll << (bits - 1));
      store(floats, std::bit_cast<std::uint32_t>(static_cast<float>(static_cast<double>(s) * *desc.quant_scale)), 4);
    }
    raw = std::move(floats);
  }
  write_file(output, raw);
  Report r;
  r.add("coder", std::string(to_string(reader.header().coder)));
  r.add("lanes", std::uint64_t{reader.header().lanes});
  r.add("elements", desc.element_count);
  r.add("output_bytes", std::uint64_t{raw.size()});
  return r;
}

Report bench(std::uint64_t pairs, const std::string& which) {
  Report r;
  r.add("pairs", pairs);
  for (CoderKind c : {CoderKind::Rans16, CoderKind::Tans8}) {
    if (which != "both" && parse_coder(which) != c) continue;
    const BenchResult b = bench_coder(c, pairs);
    const std::string k = to_string(c);
    r.add(k + ".encode_pairs_per_s", b.encode_rate(), 0);
    r.add(k + ".decode_pairs_per_s", b.decode_rate(), 0);
    r.add(k + ".bits_per_pair", pairs ? 8.0 * static_cast<double>(b.payload_bytes) / static_cast<double>(pairs) : 0.0);
  }
  return r;
}

template <typename Encoder, typename Decoder>
BenchResult bench_impl(const ProbabilityModel& model, const std::vector<CodingPair>& pairs) {
  using Clock = std::chrono::steady_clock;
  BenchResult r;
  r.pairs = pairs.size();
  const auto t0 = Clock::now();
  Encoder enc(model);
  for (std::size_t i = pairs.size(); i-- > 0;) enc.encode_unchecked(pairs[i]);
  const auto payload = enc.flush();
  const auto t1 = Clock::now();
  std::vector<CodingPair> back(pairs.size());
  using Word = typename Encoder::Word;
  Decoder dec(model, SpanWordSource<Word>(payload.words), payload.pair_count);
  for (auto& p : back) p = dec.decode();
  dec.finish();
  const auto t2 = Clock::now();
  if (back != pairs) throw Error(ErrorKind::Corruption, "benchmark round trip mismatch");
  r.payload_bytes = payload.words.size() * sizeof(Word);
  r.encode_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.decode_seconds = std::chrono::duration<double>(t2 - t1).count();
  return r;
}

void add_input_options(CLI::App* cmd, InputOptions& o) {
  cmd->add_option("--format", o.format, "bf16|fp32|fp16|e8m2|e8m3|float:E,M|posit:N,ES|int:NB|ternary-runs|"
                                        "ternary-groups|direct:FILE");
  cmd->add_option("--input", o.input, "element type of the input file when it differs from --format")
      ->check(CLI::IsMember({"native", "fp32", "bf16", "fp16"}));
  cmd->add_flag("--truncate-bf16", o.truncate_bf16, "read fp32 and keep the upper 16 bits");
  cmd->add_flag("--binary", o.binary, "ternary formats: weights are 0/1");
  cmd->add_flag("--sign-magnitude", o.sign_magnitude, "direct format: magnitude codes plus a sign bit");
  cmd->add_option("--element-bits", o.element_bits, "direct format element width")
      ->check(CLI::IsMember({8u, 16u, 32u}));
}

}  // namespace

BenchResult bench_coder(CoderKind coder, std::uint64_t count, std::uint64_t seed) {
  // bf16-like: 32 exponent codes falling off geometrically around the
  // centre, 8 payload bits each.
  FrequencyTable f;
  for (int i = 0; i < 32; ++i) {
    f.counts.push_back(1 + static_cast<std::uint64_t>(1e6 * std::exp2(-std::abs(i - 20) * 0.9)));
    f.total += f.counts.back();
  }
  ProbabilityModel model = normalize_counts(f, precision_of(coder));
  for (std::size_t i = 0; i < model.size(); ++i) model.describe(i, 8, Exponent{static_cast<std::int32_t>(i), false});
  std::mt19937_64 g(seed);
  std::discrete_distribution<std::uint32_t> pick(f.counts.begin(), f.counts.end());
  std::vector<CodingPair> pairs(count);
  for (auto& p : pairs) p = {pick(g), static_cast<std::uint32_t>(g() & 0xFF), 8};
  BenchResult r = coder == CoderKind::Tans8 ? bench_impl<TansEncoder, TansDecoder<>>(model, pairs)
                                            : bench_impl<RansEncoder, RansDecoder<>>(model, pairs);
  r.coder = coder;
  return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lossless coding-pair compression for neural network tensors"};
  app.name("cpc");
  app.require_subcommand(1);
  std::string report = "text";
  auto add_report = [&](CLI::App* cmd) {
    cmd->add_option("--report", report, "text or kv (key=value lines)")->check(CLI::IsMember({"text", "kv"}));
  };

  CompressOptions co;
  auto* c = app.add_subcommand("compress", "encode a tensor file into a stream");
  add_input_options(c, co.input);
  c->add_option("--coder", co.coder)->check(CLI::IsMember({"rans", "tans"}));
  c->add_option("--lanes", co.lanes, "independent coder lanes")->check(CLI::Range(1u, kMaxLanes));
  c->add_option("--dynamic-blocks", co.dynamic_blocks, "per-block models every L pairs")->check(CLI::PositiveNumber);
  c->add_option("--saturate", co.input.saturate, "int formats: cap payloads at B bits (lossy)")
      ->check(CLI::Range(1u, 32u));
  c->add_option("--checkpoint-stride", co.checkpoint_stride, "checkpoint index every S pairs");
  c->add_flag("--no-crc", co.no_crc, "omit per-lane checksums");
  c->add_option("-o,--output", co.output)->required();
  c->add_option("IN", co.path)->required();
  add_report(c);

  std::string d_out, d_in;
  bool dequantize = false;
  auto* d = app.add_subcommand("decompress", "restore the tensor file from a stream");
  d->add_option("-o,--output", d_out)->required();
  d->add_option("IN", d_in)->required();
  d->add_flag("--dequantize", dequantize, "quantized streams: write fp32 values");
  add_report(d);

  InputOptions ao;
  std::string a_in, histogram;
  auto* a = app.add_subcommand("analyze", "code histogram and size estimates");
  add_input_options(a, ao);
  a->add_option("--histogram", histogram, "write the bin,count CSV here");
  a->add_option("IN", a_in)->required();
  add_report(a);

  std::string q_in, q_out, q_input = "fp32", q_coder = "rans";
  unsigned q_bits = 8, q_lanes = 1;
  auto* q = app.add_subcommand("quantize", "linear quantization followed by integer coding");
  q->add_option("--bits", q_bits, "magnitude bits N_b")->check(CLI::Range(1u, 15u));
  q->add_option("--input", q_input)->check(CLI::IsMember({"fp32", "bf16", "fp16"}));
  q->add_option("--coder", q_coder)->check(CLI::IsMember({"rans", "tans"}));
  q->add_option("--lanes", q_lanes)->check(CLI::Range(1u, kMaxLanes));
  q->add_option("-o,--output", q_out)->required();
  q->add_option("IN", q_in)->required();
  add_report(q);

  std::uint64_t b_pairs = 10'000'000;
  std::string b_coder = "both";
  auto* b = app.add_subcommand("bench", "single-threaded coder throughput");
  b->add_option("--pairs", b_pairs)->check(CLI::PositiveNumber);
  b->add_option("--coder", b_coder)->check(CLI::IsMember({"rans", "tans", "both"}));
  add_report(b);

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kContractError;
  }

  try {
    const bool kv = report == "kv";
    Report r;
    if (c->parsed()) {
      r = compress(co);
    } else if (d->parsed()) {
      r = decompress(d_in, d_out, dequantize);
    } else if (a->parsed()) {
      r = analyze(a_in, ao, out, kv, histogram);
    } else if (q->parsed()) {
      r = quantize(q_in, q_input, q_bits, q_coder, q_lanes, q_out);
    } else if (b->parsed()) {
      r = bench(b_pairs, b_coder);
    }
    r.print(out, kv);
    return kOk;
  } catch (const Error& e) {
    err << "cpc: " << to_string(e.kind()) << " error: " << e.what();
    if (e.position()) err << " (at " << *e.position() << ')';
    err << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "cpc: error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace cpc::cli
