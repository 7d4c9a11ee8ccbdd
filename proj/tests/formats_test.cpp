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

#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "cpc/formats/codec.hpp"
#include "cpc/formats/direct.hpp"
#include "cpc/formats/fixed_point.hpp"
#include "cpc/formats/float.hpp"
#include "cpc/formats/integer.hpp"
#include "cpc/formats/posit.hpp"
#include "cpc/formats/saliency.hpp"
#include "cpc/formats/ternary.hpp"
#include "test_util.hpp"

using namespace cpc;

namespace {

// Code i carries exponent i.
CodeMap exponent_identity(int count) {
  CodeMap m;
  for (int e = 0; e < count; ++e) m.emplace_back(Exponent{e, false});
  return m;
}

float bits_to_float(std::uint32_t b) { return std::bit_cast<float>(b); }

// Round-to-nearest-even of an IEEE-style pattern to fewer mantissa bits with
// the same exponent width: integer rounding of the magnitude field carries
// into the exponent on its own. Overflow saturates to the largest finite.
std::uint32_t narrow_pattern(std::uint32_t pattern, unsigned exp_bits, unsigned from_mant, unsigned to_mant) {
  const unsigned drop = from_mant - to_mant;
  const std::uint32_t sign = pattern >> (exp_bits + from_mant);
  const std::uint32_t mag = pattern & ((1u << (exp_bits + from_mant)) - 1);
  std::uint32_t r = mag >> drop;
  const std::uint32_t rem = mag & ((1u << drop) - 1);
  const std::uint32_t half = 1u << (drop - 1);
  if (rem > half || (rem == half && (r & 1u))) ++r;
  const std::uint32_t max_exp = (1u << exp_bits) - 1;
  if ((r >> to_mant) >= max_exp) r = ((max_exp - 1) << to_mant) | ((1u << to_mant) - 1);
  return (sign << (exp_bits + to_mant)) | r;
}

// Posit decoder written from the textbook definition: walk the bit string,
// value = useed^k * 2^e * (1 + f).
double oracle_posit(std::uint32_t p, unsigned n, unsigned es) {
  const std::uint32_t mask = n == 32 ? 0xFFFFFFFFu : (1u << n) - 1;
  p &= mask;
  if (p == 0) return 0.0;
  if (p == (1u << (n - 1))) return std::nan("");
  bool neg = p >> (n - 1);
  if (neg) p = (0u - p) & mask;
  std::string bits;
  for (int i = static_cast<int>(n) - 2; i >= 0; --i) bits.push_back(((p >> i) & 1u) ? '1' : '0');
  std::size_t i = 0;
  const char lead = bits[0];
  while (i < bits.size() && bits[i] == lead) ++i;
  const int run = static_cast<int>(i);
  const int k = lead == '1' ? run - 1 : -run;
  if (i < bits.size()) ++i;  // terminator
  int e = 0;
  for (unsigned j = 0; j < es; ++j) {
    e <<= 1;
    if (i < bits.size()) e |= bits[i++] == '1';
  }
  double f = 1.0, w = 0.5;
  for (; i < bits.size(); ++i, w /= 2) f += bits[i] == '1' ? w : 0.0;
  const double useed = std::pow(2.0, std::pow(2.0, es));
  const double v = std::pow(useed, k) * std::pow(2.0, e) * f;
  return neg ? -v : v;
}

// Posit codes keyed by scale + max_scale, zero and NaR at the end.
struct PositSetup {
  PositCodes codes;
  CodeMap map;
};

PositSetup posit_setup(PositFormat f) {
  const int m = posit_max_scale(f);
  PositSetup s;
  s.codes.scale_to_code = ExponentMap(-m, m);
  for (int sc = -m; sc <= m; ++sc) {
    s.codes.scale_to_code.set(sc, static_cast<std::uint32_t>(sc + m));
    s.map.emplace_back(Exponent{sc, false});
  }
  s.codes.zero_code = static_cast<std::uint32_t>(2 * m + 1);
  s.codes.nar_code = static_cast<std::uint32_t>(2 * m + 2);
  s.map.emplace_back(DirectValue{0, f.n});
  s.map.emplace_back(DirectValue{posit_nar(f), f.n});
  return s;
}

std::vector<std::uint8_t> as_bytes(const std::vector<std::int8_t>& w) {
  std::vector<std::uint8_t> out(w.size());
  std::memcpy(out.data(), w.data(), w.size());
  return out;
}

std::vector<std::int8_t> random_ternary(std::size_t n, double density, bool binary) {
  auto& g = test::rng();
  std::bernoulli_distribution nz(density), neg(0.5);
  std::vector<std::int8_t> w(n);
  for (auto& x : w) x = nz(g) ? ((!binary && neg(g)) ? -1 : 1) : 0;
  return w;
}

}  // namespace

TEST_CASE("bf16 pairs: worked values and error paths") {
  const auto map = ExponentMap::identity(0, 255);
  const CodingPair one = bf16_to_pair(0x3F80, map);
  CHECK(one == CodingPair{0x7F, 0x00, 8});
  const CodingPair minus_one = bf16_to_pair(0xBF80, map);
  CHECK(minus_one == CodingPair{0x7F, 0x80, 8});
  const auto codes = exponent_identity(256);
  CHECK(pair_to_bf16(one, codes) == 0x3F80);
  CHECK(pair_to_bf16(minus_one, codes) == 0xBF80);

  ExponentMap partial(0, 255);
  partial.set(0x7F, 0);
  CHECK(bf16_to_pair(0x3F80, partial).code == 0);
  try {
    bf16_to_pair(0x4000, partial);
    FAIL("unmapped exponent accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Alphabet);
  }
  CodeMap no_exponent{DirectValue{0, 16}};
  CHECK_THROWS_AS(pair_to_bf16({0, 0, 8}, no_exponent), Error);
}

TEST_CASE("bf16 pairs: all 2^16 patterns round trip") {
  const auto map = ExponentMap::identity(0, 255);
  const auto codes = exponent_identity(256);
  for (std::uint32_t b = 0; b < 0x10000; ++b) {
    const CodingPair p = bf16_to_pair(static_cast<std::uint16_t>(b), map);
    REQUIRE(p.payload_len == 8);
    REQUIRE(p.code == ((b >> 7) & 0xFF));
    REQUIRE(pair_to_bf16(p, codes) == b);
  }
}

TEST_CASE("bf16 pairs: sparse exponent map round trips the mapped patterns") {
  ExponentMap map(0, 255);
  CodeMap codes;
  for (int e = 100; e < 131; ++e) {
    map.set(e, static_cast<std::uint32_t>(codes.size()));
    codes.emplace_back(Exponent{e, false});
  }
  int mapped = 0;
  for (std::uint32_t b = 0; b < 0x10000; ++b) {
    const int e = static_cast<int>((b >> 7) & 0xFF);
    if (e < 100 || e >= 131) continue;
    ++mapped;
    REQUIRE(pair_to_bf16(bf16_to_pair(static_cast<std::uint16_t>(b), map), codes) == b);
  }
  CHECK(mapped == 31 * 256);
}

TEST_CASE("custom floats: lossless pattern path for e8m2 and e8m3") {
  for (FloatFormat f : {FloatFormat::e8m2(), FloatFormat::e8m3(), FloatFormat::fp16()}) {
    const auto map = ExponentMap::identity(0, static_cast<int>(f.max_exp_field()));
    const auto codes = exponent_identity(static_cast<int>(f.max_exp_field()) + 1);
    for (std::uint32_t b = 0; b < (1u << f.total_bits()); ++b) {
      const CodingPair p = pattern_to_pair(b, f, map);
      REQUIRE(p.payload_len == 1 + f.mant_bits);
      REQUIRE(pair_to_pattern(p, f, codes) == b);
    }
  }
}

TEST_CASE("custom floats: bf16 to e8m2 rounding matches integer RNE oracle") {
  const FloatFormat f = FloatFormat::e8m2();
  const auto map = ExponentMap::identity(0, 255);
  const auto codes = exponent_identity(256);
  for (std::uint32_t b = 0; b < 0x10000; ++b) {
    if (((b >> 7) & 0xFF) == 0xFF) continue;  // inf / NaN
    const double v = bits_to_float(b << 16);
    const auto r = float_to_pair(v, f, map);
    const std::uint32_t expect = narrow_pattern(b, 8, 7, 2);
    REQUIRE(pair_to_pattern(r.pair, f, codes) == expect);
    REQUIRE(pair_to_float(r.pair, f, codes) == format_value(expect, f));
  }
}

TEST_CASE("custom floats: fp32 to e8m3 rounding matches integer RNE oracle") {
  const FloatFormat f = FloatFormat::e8m3();
  const auto map = ExponentMap::identity(0, 255);
  const auto codes = exponent_identity(256);
  auto& g = test::rng();
  for (int i = 0; i < 1'000'000; ++i) {
    auto b = static_cast<std::uint32_t>(g());
    if (((b >> 23) & 0xFF) == 0xFF) continue;
    if (i % 4 == 0) b = (b & 0xFFF00000u) | 0x00080000u;  // exact tie
    const auto r = float_to_pair(bits_to_float(b), f, map);
    const std::uint32_t expect = narrow_pattern(b, 8, 23, 3);
    REQUIRE(pair_to_pattern(r.pair, f, codes) == expect);
  }
}

TEST_CASE("custom floats: carry, saturation and zero") {
  const FloatFormat f = FloatFormat::e8m2();
  const auto map = ExponentMap::identity(0, 255);
  const auto codes = exponent_identity(256);

  // mantissa 1111111b at exponent 0x7F rounds up into exponent 0x80
  const double v = bits_to_float(0x3FFF0000u);
  const auto r = float_to_pair(v, f, map);
  CHECK(r.pair.code == 0x80);
  CHECK((r.pair.payload & 0x3) == 0);
  CHECK(pair_to_float(r.pair, f, codes) == 2.0);
  CHECK_FALSE(r.saturated);

  // carry into an exponent without a code saturates at the original one
  ExponentMap only(0, 255);
  only.set(0x7F, 0x7F);
  const auto s = float_to_pair(v, f, only);
  CHECK(s.saturated);
  CHECK(s.pair.code == 0x7F);
  CHECK(pair_to_float(s.pair, f, codes) == 1.75);

  // finite overflow saturates to the largest finite magnitude
  const auto big = float_to_pair(-3.3e38, f, map);
  CHECK(big.saturated);
  CHECK(pair_to_float(big.pair, f, codes) == -format_value((254u << 2) | 3u, f));

  const auto zero = float_to_pair(0.0, f, map);
  CHECK(zero.pair == CodingPair{0, 0, 3});
  CHECK_THROWS_AS(round_to_format(INFINITY, f), Error);
}

TEST_CASE("posit: canonical patterns") {
  const PositFormat f{16, 1};
  const auto s = posit_setup(f);
  const CodingPair one = posit_to_pair(0x4000, f, s.codes);
  CHECK(s.map[one.code] == Mapping{Exponent{0, false}});
  CHECK(one.payload == 0);
  CHECK(pair_posit_value(one, f, s.map) == 1.0);
  const CodingPair zero = posit_to_pair(0, f, s.codes);
  CHECK(zero.code == *s.codes.zero_code);
  CHECK(zero.payload_len == 0);

  PositCodes no_nar = s.codes;
  no_nar.nar_code.reset();
  try {
    posit_to_pair(0x8000, f, no_nar);
    FAIL("NaR accepted without a code");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Mapping);
  }
  for (std::uint8_t n = 2; n <= 32; ++n) {
    CHECK(posit_value(std::uint32_t{1} << (n - 2), {n, 0}) == 1.0);
  }
}

TEST_CASE("posit(16,1): all 2^16 patterns against the brute-force decoder") {
  const PositFormat f{16, 1};
  const auto s = posit_setup(f);
  for (std::uint32_t p = 0; p < 0x10000; ++p) {
    const CodingPair pair = posit_to_pair(p, f, s.codes);
    const double expect = oracle_posit(p, 16, 1);
    const double got = pair_posit_value(pair, f, s.map);
    if (std::isnan(expect)) {
      REQUIRE(std::isnan(got));
    } else {
      REQUIRE(got == expect);
    }
    REQUIRE(pair_to_posit(pair, f, s.map) == p);
  }
}

TEST_CASE("posit: small formats exhaustively") {
  for (std::uint8_t n = 2; n <= 12; ++n) {
    for (std::uint8_t es = 0; es <= 3 && es < n - 1; ++es) {
      const PositFormat f{n, es};
      const auto s = posit_setup(f);
      for (std::uint32_t p = 0; p < (1u << n); ++p) {
        const CodingPair pair = posit_to_pair(p, f, s.codes);
        const double expect = oracle_posit(p, n, es);
        const double got = pair_posit_value(pair, f, s.map);
        REQUIRE((std::isnan(expect) ? std::isnan(got) : got == expect));
        REQUIRE(pair_to_posit(pair, f, s.map) == p);
      }
    }
  }
}

TEST_CASE("posit(32,2): sampled round trip") {
  const PositFormat f{32, 2};
  const auto s = posit_setup(f);
  auto& g = test::rng();
  for (int i = 0; i < 200'000; ++i) {
    const auto p = static_cast<std::uint32_t>(g());
    const CodingPair pair = posit_to_pair(p, f, s.codes);
    REQUIRE(pair_to_posit(pair, f, s.map) == p);
    const double expect = oracle_posit(p, 32, 2);
    if (!std::isnan(expect)) REQUIRE(pair_posit_value(pair, f, s.map) == expect);
  }
}

TEST_CASE("integers: worked examples") {
  CHECK(int_to_pair(-1) == CodingPair{1, 1, 1});
  CHECK(int_to_pair(13) == CodingPair{4, 0b0101, 4});
  CHECK(int_to_pair(-13) == CodingPair{4, 0b1101, 4});
  CHECK(int_to_pair(0) == CodingPair{0, 0, 0});
  CHECK(pair_to_int({4, 0b0101, 4}) == 13);
  CHECK_THROWS_AS(int_to_pair(std::int64_t{1} << 31), Error);
}

TEST_CASE("integers: exhaustive identity and code law over [-65535, 65535]") {
  for (std::int64_t v = -65535; v <= 65535; ++v) {
    const CodingPair p = int_to_pair(v);
    REQUIRE(pair_to_int(p) == v);
    if (v == 0) continue;
    const auto a = static_cast<std::uint64_t>(v < 0 ? -v : v);
    REQUIRE((std::uint64_t{1} << (p.code - 1)) <= a);
    REQUIRE(a < (std::uint64_t{1} << p.code));
    REQUIRE(p.payload_len == p.code);
  }
}

TEST_CASE("integers: capped payloads round to nearest even") {
  for (unsigned cap = 1; cap <= 8; ++cap) {
    for (std::int64_t v = -65535; v <= 65535; ++v) {
      const CodingPair p = int_to_pair(v, cap);
      REQUIRE(p.payload_len <= cap);
      const double a = std::fabs(static_cast<double>(v));
      const int k = a == 0 ? 0 : static_cast<int>(std::floor(std::log2(a))) + 1;
      double expect = a;
      if (k > static_cast<int>(cap)) {
        const double step = std::ldexp(1.0, k - static_cast<int>(cap));
        expect = std::nearbyint(a / step) * step;
      }
      REQUIRE(static_cast<double>(pair_to_int(p)) == (v < 0 ? -expect : expect));
    }
  }
}

TEST_CASE("ternary runs: worked example and degenerate tails") {
  const std::vector<std::int8_t> w{0, 0, 0, -1, 1, 0, 0, 1};
  const auto runs = ternary_to_runs(w, false);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0] == TernaryRun{3, -1, false});
  CHECK(runs[1] == TernaryRun{0, 1, false});
  CHECK(runs[2] == TernaryRun{2, 1, false});
  CHECK(runs_to_ternary(runs, false) == w);

  const std::vector<std::int8_t> zeros(17, 0);
  const auto tail = ternary_to_runs(zeros, false);
  REQUIRE(tail.size() == 1);
  CHECK(tail[0] == TernaryRun{17, std::nullopt, true});
  CHECK(run_to_pair(tail[0], false) == CodingPair{kTrailingRunCode, 0, 0});
  CHECK(ternary_to_runs(std::vector<std::int8_t>{}, false).empty());

  // run 3 = 11b: class 2, payload = sign then the bit below the leading one
  CHECK(run_to_pair(runs[0], false) == CodingPair{2, 0b11, 2});
  CHECK(run_to_pair(runs[1], false) == CodingPair{0, 0, 1});
  CHECK(run_to_pair({3, std::nullopt, false}, true) == CodingPair{2, 1, 1});

  CHECK_THROWS_AS(ternary_to_runs(std::vector<std::int8_t>{0, 2}, false), Error);
  CHECK_THROWS_AS(ternary_to_runs(std::vector<std::int8_t>{0, -1}, true), Error);
}

TEST_CASE("ternary runs: random round trips through pairs") {
  for (bool binary : {false, true}) {
    for (double density : {0.01, 0.3, 0.9}) {
      const auto w = random_ternary(100'000, density, binary);
      const auto runs = ternary_to_runs(w, binary);
      REQUIRE(runs_to_ternary(runs, binary) == w);
      std::vector<CodingPair> pairs;
      for (const auto& r : runs) pairs.push_back(run_to_pair(r, binary));
      const auto back = runs_from_pairs(pairs, binary, w.size());
      REQUIRE(runs_to_ternary(back, binary) == w);
    }
  }
}

TEST_CASE("ternary groups: worked example and laws") {
  const std::vector<std::int8_t> g{0, -1, 1, 0, 0, -1, 0, 0};
  const auto pairs = ternary_to_groups(g, false);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == CodingPair{0b01100100, 0b101, 3});
  CHECK(groups_to_ternary(pairs, false, 8) == g);
  CHECK(ternary_to_groups(std::vector<std::int8_t>(8, 0), false)[0] == CodingPair{0, 0, 0});
  CHECK(ternary_to_groups(std::vector<std::int8_t>{0, 1, 1, 0, 0, 1, 0, 0}, true)[0] == CodingPair{0b01100100, 0, 0});

  for (bool binary : {false, true}) {
    for (std::size_t n : {1u, 7u, 8u, 9u, 100'003u}) {
      const auto w = random_ternary(n, 0.4, binary);
      const auto p = ternary_to_groups(w, binary);
      REQUIRE(p.size() == (n + 7) / 8);
      std::size_t payload = 0, nonzero = 0;
      for (const auto& x : p) payload += x.payload_len;
      for (auto x : w) nonzero += x != 0;
      REQUIRE(payload == (binary ? 0 : nonzero));
      REQUIRE(groups_to_ternary(p, binary, n) == w);
    }
  }
}

TEST_CASE("direct values: plain and sign-magnitude") {
  // 7-bit magnitudes plus a sign bit: 128 codes
  std::vector<std::uint32_t> mags(128);
  for (std::uint32_t i = 0; i < 128; ++i) mags[i] = i;
  const DirectValueMap map(mags);
  CodeMap codes;
  for (auto m : mags) codes.emplace_back(DirectValue{m, 8});
  for (int v = -127; v <= 127; ++v) {
    const CodingPair p = signed_direct_to_pair(v, map);
    REQUIRE(p.payload_len == (v == 0 ? 0 : 1));
    REQUIRE(p.code < 128);
    REQUIRE(pair_to_signed_direct(p, codes) == v);
  }

  const std::vector<std::uint32_t> zero_only{0};
  const DirectValueMap z(zero_only);
  CHECK(direct_to_pair(0, z) == CodingPair{0, 0, 0});

  // random 4-bit alphabet, exhaustive
  auto& g = test::rng();
  std::vector<std::uint32_t> alphabet(16);
  for (auto& a : alphabet) a = static_cast<std::uint32_t>(g());
  const DirectValueMap amap(alphabet);
  CodeMap acodes;
  for (auto a : alphabet) acodes.emplace_back(DirectValue{a, 32});
  for (std::uint32_t i = 0; i < 16; ++i) {
    const CodingPair p = direct_to_pair(alphabet[i], amap);
    CHECK(p == CodingPair{i, 0, 0});
    CHECK(pair_to_direct(p, acodes) == alphabet[i]);
  }
  try {
    direct_to_pair(12345, z);
    FAIL("unmapped value accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Alphabet);
  }
}

TEST_CASE("saliency: dual codes per exponent") {
  DualExponentMap dual{FloatFormat::bf16(), 2, 7, ExponentMap(0, 255), ExponentMap(0, 255)};
  CodeMap codes;
  for (int e = 0; e < 256; ++e) {
    dual.ordinary.set(e, static_cast<std::uint32_t>(codes.size()));
    codes.emplace_back(Exponent{e, false});
    dual.salient.set(e, static_cast<std::uint32_t>(codes.size()));
    codes.emplace_back(Exponent{e, true});
  }
  const double v = 1.3;
  const CodingPair o = saliency_pair(v, false, dual);
  const CodingPair s = saliency_pair(v, true, dual);
  CHECK(o.code != s.code);
  CHECK(o.payload_len == 3);
  CHECK(s.payload_len == 8);
  CHECK(o == float_to_pair(v, dual.format(false), dual.ordinary).pair);

  auto& g = test::rng();
  std::normal_distribution<double> nd(0.0, 0.02);
  std::bernoulli_distribution important(0.05);
  for (int i = 0; i < 100'000; ++i) {
    const double x = nd(g);
    const bool imp = important(g);
    const CodingPair p = saliency_pair(x, imp, dual);
    const SalientValue back = pair_to_salient(p, dual.base, codes);
    REQUIRE(back.important == imp);
    REQUIRE(back.value == format_value(round_to_format(x, dual.format(imp)).pattern, dual.format(imp)));
  }

  DualExponentMap sparse{FloatFormat::bf16(), 2, 7, ExponentMap(0, 255), ExponentMap(0, 255)};
  sparse.ordinary.set(0x7F, 0);
  try {
    saliency_pair(1.0, true, sparse);
    FAIL("missing salient code accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Mapping);
  }
}

TEST_CASE("fixed point: shifts, zero and exact round trips") {
  const FloatFormat base = FloatFormat::bf16();
  std::vector<CodeSpec> specs;
  specs.push_back({1, 0, DirectValue{0, 16}});
  for (int e = 1; e < 255; ++e) specs.push_back({1, 8, Exponent{e, false}});
  const ProbabilityModel model(16, specs);
  const CodeMap codes = model.code_map();
  const ExponentMap exps = ExponentMap::from_model(model, 0, 255);

  const CodingPair one{exps.at(0x7F), 0x00, 8};
  CHECK(pair_to_fixed(one, base, codes, 8).value == 256);
  CHECK(pair_to_fixed({exps.at(0x7F), 0x80, 8}, base, codes, 8).value == -256);
  const auto z = fixed_to_pair(0, 8, base, model);
  CHECK(z.pair == CodingPair{0, 0, 0});
  CHECK(pair_to_fixed(z.pair, base, codes, 8).value == 0);

  // exactly representable: up to 8 significant bits
  auto& g = test::rng();
  std::uniform_int_distribution<std::int64_t> sig(1, 255);
  std::uniform_int_distribution<int> sh(0, 20);
  for (int i = 0; i < 100'000; ++i) {
    std::int64_t v = sig(g) << sh(g);
    if (i & 1) v = -v;
    const auto p = fixed_to_pair(v, 12, base, model);
    REQUIRE_FALSE(p.saturated);
    REQUIRE(pair_to_fixed(p.pair, base, codes, 12, 40).value == v);
  }

  // rounding on the inverse path: 0x1FF (9 significant bits) ties to even
  const auto r = fixed_to_pair(0x1FF, 0, base, model);
  CHECK(pair_to_fixed(r.pair, base, codes, 0).value == 0x200);
  const auto r2 = fixed_to_pair(0x181, 0, base, model);
  CHECK(pair_to_fixed(r2.pair, base, codes, 0).value == 0x180);

  // overflow of the destination width saturates
  const auto big = pair_to_fixed({exps.at(0x7F + 40), 0x00, 8}, base, codes, 0, 32);
  CHECK(big.saturated);
  CHECK(big.value == 0x7FFFFFFF);

  const ProbabilityModel no_zero(16, {specs.begin() + 1, specs.end()});
  CHECK_THROWS_AS(fixed_to_pair(0, 8, base, no_zero), Error);
}

TEST_CASE("codec: every format kind round trips through a model") {
  auto& g = test::rng();
  auto check = [&](FormatDescriptor d, std::vector<std::uint8_t> raw, const EncodeOptions& opt = {}) {
    for (unsigned precision : {8u, 16u}) {
      const auto enc = encode_tensor(d, raw, precision, opt);
      REQUIRE(validate_model(enc.model).empty());
      const auto codes = enc.model.code_map();
      for (const auto& p : enc.pairs) REQUIRE(p.payload_len == enc.model[p.code].payload_bits);
      REQUIRE(decode_tensor(d, codes, enc.pairs) == raw);
    }
  };
  const std::size_t n = 20'000;

  {
    FormatDescriptor d{FormatKind::Float, n};
    std::vector<std::uint8_t> raw(2 * n);
    std::normal_distribution<float> nd(0.0f, 0.02f);
    for (std::size_t i = 0; i < n; ++i) {
      const auto b = static_cast<std::uint16_t>(std::bit_cast<std::uint32_t>(nd(g)) >> 16);
      raw[2 * i] = static_cast<std::uint8_t>(b);
      raw[2 * i + 1] = static_cast<std::uint8_t>(b >> 8);
    }
    check(d, raw);
  }
  {
    FormatDescriptor d{FormatKind::Float, n};
    d.float_format = FloatFormat::e8m3();
    std::vector<std::uint8_t> raw(2 * n);
    std::uniform_int_distribution<std::uint32_t> mant(0, 15), sgn(0, 1), ex(100, 130);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t b = (sgn(g) << 11) | (ex(g) << 3) | mant(g);
      raw[2 * i] = static_cast<std::uint8_t>(b);
      raw[2 * i + 1] = static_cast<std::uint8_t>(b >> 8);
    }
    check(d, raw);
  }
  {
    FormatDescriptor d{FormatKind::Posit, n};
    d.posit_format = {16, 1};
    std::vector<std::uint8_t> raw(2 * n);
    std::geometric_distribution<int> geo(0.3);
    for (std::size_t i = 0; i < n; ++i) {
      // mostly near 1.0, with zeros and NaR mixed in
      std::uint32_t b = (0x4000u >> std::min(geo(g), 13)) | (static_cast<std::uint32_t>(g()) & 0xFF);
      if (i % 97 == 0) b = 0;
      if (i % 89 == 0) b = 0x8000;
      if (i & 1) b = (0x10000u - b) & 0xFFFF;
      raw[2 * i] = static_cast<std::uint8_t>(b);
      raw[2 * i + 1] = static_cast<std::uint8_t>(b >> 8);
    }
    check(d, raw);
  }
  {
    FormatDescriptor d{FormatKind::Integer, n};
    d.int_bits = 16;
    std::vector<std::uint8_t> raw(2 * n);
    std::normal_distribution<double> nd(0, 300);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(std::clamp(std::lround(nd(g)), -32767L, 32767L));
      raw[2 * i] = static_cast<std::uint8_t>(v);
      raw[2 * i + 1] = static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) >> 8);
    }
    check(d, raw);
  }
  for (bool binary : {false, true}) {
    for (FormatKind k : {FormatKind::TernaryRuns, FormatKind::TernaryGroups}) {
      FormatDescriptor d{k, n};
      d.binary = binary;
      check(d, as_bytes(random_ternary(n, 0.2, binary)));
      // trailing zeros and a partial final group
      auto w = random_ternary(n - 3, 0.2, binary);
      w.insert(w.end(), 20, 0);
      d.element_count = w.size();
      check(d, as_bytes(w));
    }
  }
  {
    FormatDescriptor d{FormatKind::Direct, n};
    d.int_bits = 8;
    std::vector<std::uint8_t> raw(n);
    std::uniform_int_distribution<int> pick(0, 15);
    for (auto& b : raw) b = static_cast<std::uint8_t>(pick(g) * 7);
    check(d, raw);
    d.sign_magnitude = true;
    std::normal_distribution<double> nd(0, 30);
    for (auto& b : raw)
      b = static_cast<std::uint8_t>(static_cast<std::int8_t>(std::clamp(std::lround(nd(g)), -127L, 127L)));
    check(d, raw);

    d.sign_magnitude = false;
    EncodeOptions opt;
    opt.direct_values = std::vector<std::uint32_t>{0, 7};
    CHECK_THROWS_AS(encode_tensor(d, raw, 16, opt), Error);
  }
}

TEST_CASE("codec: size and element checks") {
  FormatDescriptor d{FormatKind::Float, 4};
  std::vector<std::uint8_t> raw(7);
  CHECK_THROWS_AS(to_keyed_pairs(d, raw), Error);
  d.float_format = FloatFormat::e8m2();
  raw.assign(8, 0xFF);  // 16-bit element wider than 11 bits
  CHECK_THROWS_AS(to_keyed_pairs(d, raw), Error);

  FormatDescriptor r{FormatKind::TernaryRuns, 8};
  const auto enc = encode_tensor(r, as_bytes({0, 0, 0, -1, 1, 0, 0, 1}), 16);
  CHECK(enc.pairs.size() == 3);
  r.element_count = 9;
  CHECK_THROWS_AS(decode_tensor(r, enc.model.code_map(), enc.pairs), Error);
}
