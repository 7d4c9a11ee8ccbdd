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

#include "cpc/formats/posit.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace cpc {

namespace {

struct Regime {
  int k;
  int e;
  unsigned regime_len;
  unsigned exp_present;
  unsigned fraction_bits;
};

Regime split_scale(int scale, const PositFormat& fmt) {
  const int k = scale >> fmt.es;  // floor division
  const int e = scale - k * (1 << fmt.es);
  const unsigned body = fmt.n - 1u;
  unsigned regime_len;
  if (k >= 0) {
    const auto run = static_cast<unsigned>(k) + 1;
    regime_len = run < body ? run + 1 : run;
  } else {
    regime_len = static_cast<unsigned>(-k) + 1;
  }
  const unsigned remaining = body - regime_len;
  const unsigned exp_present = std::min<unsigned>(fmt.es, remaining);
  return {k, e, regime_len, exp_present, remaining - exp_present};
}

}  // namespace

void validate(const PositFormat& fmt) {
  if (fmt.n < 2 || fmt.n > 32 || fmt.es > 4 || fmt.es >= fmt.n - 1)
    throw Error(ErrorKind::Contract, "unsupported posit layout");
}

int posit_max_scale(const PositFormat& fmt) { return (fmt.n - 2) * (1 << fmt.es); }

unsigned posit_fraction_bits(int scale, const PositFormat& fmt) {
  if (scale < -posit_max_scale(fmt) || scale > posit_max_scale(fmt))
    throw Error(ErrorKind::Contract, "posit scale out of range");
  return split_scale(scale, fmt).fraction_bits;
}

std::optional<PositFields> posit_fields(std::uint32_t pattern, const PositFormat& fmt) {
  const unsigned n = fmt.n;
  pattern &= low_mask(n);
  if (pattern == 0 || pattern == posit_nar(fmt)) return std::nullopt;

  PositFields f;
  f.negative = (pattern >> (n - 1)) & 1u;
  if (f.negative) pattern = (~pattern + 1) & low_mask(n);

  const unsigned body = n - 1;
  const std::uint32_t first = (pattern >> (body - 1)) & 1u;
  unsigned run = 0;
  while (run < body && ((pattern >> (body - 1 - run)) & 1u) == first) ++run;
  const int k = first ? static_cast<int>(run) - 1 : -static_cast<int>(run);
  const unsigned regime_len = run < body ? run + 1 : run;
  const unsigned remaining = body - regime_len;
  const unsigned exp_present = std::min<unsigned>(fmt.es, remaining);
  const unsigned fb = remaining - exp_present;
  const auto e_bits = static_cast<int>((pattern >> fb) & low_mask(exp_present));
  const int e = e_bits << (fmt.es - exp_present);

  f.scale = k * (1 << fmt.es) + e;
  f.fraction_bits = static_cast<std::uint8_t>(fb);
  f.fraction = pattern & low_mask(fb);
  return f;
}

std::uint32_t posit_pattern(const PositFields& f, const PositFormat& fmt) {
  if (f.scale < -posit_max_scale(fmt) || f.scale > posit_max_scale(fmt))
    throw Error(ErrorKind::Mapping, "posit scale " + std::to_string(f.scale) + " out of range");
  const Regime r = split_scale(f.scale, fmt);
  if (f.fraction_bits != r.fraction_bits || f.fraction > low_mask(r.fraction_bits))
    throw Error(ErrorKind::Contract, "fraction width does not match posit scale");
  const unsigned dropped = fmt.es - r.exp_present;
  if (r.e & static_cast<int>(low_mask(dropped)))
    throw Error(ErrorKind::Mapping, "posit scale " + std::to_string(f.scale) + " not representable");

  std::uint32_t regime;
  if (r.k >= 0) {
    const auto run = static_cast<unsigned>(r.k) + 1;
    regime = low_mask(run) << (r.regime_len - run);  // ones, then the terminating zero if present
  } else {
    regime = 1;  // zeros, then the terminating one
  }
  std::uint32_t body = regime;
  body = (body << r.exp_present) | static_cast<std::uint32_t>(r.e >> dropped);
  body = (body << r.fraction_bits) | f.fraction;
  if (f.negative) body = (~body + 1) & low_mask(fmt.n);
  return body;
}

double posit_value(std::uint32_t pattern, const PositFormat& fmt) {
  pattern &= low_mask(fmt.n);
  if (pattern == 0) return 0.0;
  auto f = posit_fields(pattern, fmt);
  if (!f) return std::nan("");
  const double frac = std::ldexp(static_cast<double>(f->fraction), -f->fraction_bits);
  const double v = std::ldexp(1.0 + frac, f->scale);
  return f->negative ? -v : v;
}

PositCodes PositCodes::from_model(const ProbabilityModel& model, const PositFormat& fmt) {
  PositCodes out;
  out.scale_to_code = ExponentMap(-posit_max_scale(fmt), posit_max_scale(fmt));
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto code = static_cast<std::uint32_t>(i);
    if (auto* e = std::get_if<Exponent>(&model[i].mapping)) {
      out.scale_to_code.set(e->value, code);
    } else if (auto* d = std::get_if<DirectValue>(&model[i].mapping)) {
      if (d->bits == 0) out.zero_code = code;
      if (d->bits == posit_nar(fmt)) out.nar_code = code;
    }
  }
  return out;
}

CodingPair posit_to_pair(std::uint32_t pattern, const PositFormat& fmt, const PositCodes& codes) {
  pattern &= low_mask(fmt.n);
  auto f = posit_fields(pattern, fmt);
  if (!f) {
    const auto& code = pattern == 0 ? codes.zero_code : codes.nar_code;
    if (!code) throw Error(ErrorKind::Mapping, pattern == 0 ? "posit zero has no code" : "posit NaR has no code");
    return {*code, 0, 0};
  }
  CodingPair p;
  p.code = codes.scale_to_code.at(f->scale);
  p.payload_len = static_cast<std::uint8_t>(1 + f->fraction_bits);
  p.payload = (static_cast<std::uint32_t>(f->negative) << f->fraction_bits) | f->fraction;
  return p;
}

namespace {

const Mapping& mapping_of(std::span<const Mapping> code_map, std::uint32_t code) {
  if (code >= code_map.size()) throw Error(ErrorKind::Alphabet, "code " + std::to_string(code) + " not in model");
  return code_map[code];
}

}  // namespace

std::uint32_t pair_to_posit(const CodingPair& pair, const PositFormat& fmt, std::span<const Mapping> code_map) {
  const Mapping& m = mapping_of(code_map, pair.code);
  if (auto* d = std::get_if<DirectValue>(&m)) {
    if (pair.payload_len != 0) throw Error(ErrorKind::Contract, "special posit code carries a payload");
    return d->bits & low_mask(fmt.n);
  }
  auto* e = std::get_if<Exponent>(&m);
  if (!e) throw Error(ErrorKind::Mapping, "code " + std::to_string(pair.code) + " carries no posit scale");
  if (pair.payload_len < 1) throw Error(ErrorKind::Contract, "posit payload lacks a sign bit");
  PositFields f;
  f.scale = e->value;
  f.fraction_bits = static_cast<std::uint8_t>(pair.payload_len - 1);
  f.negative = (pair.payload >> f.fraction_bits) & 1u;
  f.fraction = pair.payload & low_mask(f.fraction_bits);
  return posit_pattern(f, fmt);
}

double pair_posit_value(const CodingPair& pair, const PositFormat& fmt, std::span<const Mapping> code_map) {
  const Mapping& m = mapping_of(code_map, pair.code);
  if (auto* d = std::get_if<DirectValue>(&m)) return d->bits == 0 ? 0.0 : std::nan("");
  auto* e = std::get_if<Exponent>(&m);
  if (!e || pair.payload_len < 1) throw Error(ErrorKind::Mapping, "code carries no posit scale");
  const unsigned fb = pair.payload_len - 1u;
  if (fb != posit_fraction_bits(e->value, fmt)) throw Error(ErrorKind::Contract, "fraction width mismatch");
  const double frac = std::ldexp(static_cast<double>(pair.payload & low_mask(fb)), -static_cast<int>(fb));
  const double v = std::ldexp(1.0 + frac, e->value);
  return (pair.payload >> fb) & 1u ? -v : v;
}

}  // namespace cpc
