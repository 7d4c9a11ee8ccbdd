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

#include <cmath>
#include <random>

#include "cpc/error.hpp"
#include "cpc/quantize.hpp"
#include "test_util.hpp"

using namespace cpc;

namespace {

std::vector<float> gaussian(std::size_t n, double sigma) {
  auto& g = test::rng();
  std::normal_distribution<float> nd(0.0f, static_cast<float>(sigma));
  std::vector<float> w(n);
  for (auto& x : w) x = nd(g);
  return w;
}

// Element-wise evaluation of round((2^Nb - 1) / max|W| * W) with an explicit
// half-away-from-zero rule built from floor.
std::int32_t oracle_q(float w, double max_abs, unsigned nb) {
  const double t = static_cast<double>((1u << nb) - 1) / max_abs * static_cast<double>(w);
  const double r = t >= 0 ? std::floor(t + 0.5) : -std::floor(-t + 0.5);
  return static_cast<std::int32_t>(r);
}

}  // namespace

TEST_CASE("quantize: matches the element-wise oracle") {
  for (unsigned nb : {1u, 4u, 6u, 8u, 11u, 15u}) {
    auto w = gaussian(100'000, 0.02);
    w[17] = 0.0f;
    const auto q = quantize_linear(w, {nb});
    double max_abs = 0;
    for (float x : w) max_abs = std::max(max_abs, std::fabs(static_cast<double>(x)));
    CHECK(q.max_abs == max_abs);
    CHECK(q.values[17] == 0);
    const std::int32_t top = (1 << nb) - 1;
    for (std::size_t i = 0; i < w.size(); ++i) {
      REQUIRE(q.values[i] == oracle_q(w[i], max_abs, nb));
      REQUIRE(std::abs(q.values[i]) <= top);
    }
  }
}

TEST_CASE("quantize: endpoints, ties and degenerate input") {
  const std::vector<float> w{-2.0f, 2.0f, 1.0f, 0.0f};
  const auto q = quantize_linear(w, {3});
  CHECK(q.values == std::vector<std::int32_t>{-7, 7, 4, 0});  // 3.5 rounds away from zero
  CHECK(q.step() == doctest::Approx(2.0 / 7.0));
  const std::vector<float> zeros(10, 0.0f);
  try {
    quantize_linear(zeros, {8});
    FAIL("zero tensor accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateScale);
  }
  CHECK_THROWS_AS(quantize_linear(w, {0}), Error);
}

TEST_CASE("quantize: idempotent on its own grid") {
  for (unsigned nb : {2u, 7u, 12u}) {
    const auto w = gaussian(50'000, 1.0);
    const auto q = quantize_linear(w, {nb});
    const auto back = dequantize(q.values, q.step());
    const auto q2 = quantize_linear(back, {nb});
    REQUIRE(q2.values == q.values);
  }
}

TEST_CASE("quant report: payload law and coder ordering") {
  const auto w = gaussian(1'000'000, 0.02);
  double prev = 0;
  for (unsigned nb = 6; nb <= 11; ++nb) {
    const auto q = quantize_linear(w, {nb});
    const auto ideal = quant_report(q.values, SizeEstimate::Ideal);
    const auto rans = quant_report(q.values, SizeEstimate::Rans);
    const auto tans = quant_report(q.values, SizeEstimate::Tans);
    CHECK(ideal.total_values == w.size());
    CHECK(ideal.avg_bits_per_weight == doctest::Approx(ideal.avg_code_bits + ideal.avg_payload_bits));
    CHECK(ideal.compressed_fraction == doctest::Approx(100.0 * ideal.avg_bits_per_weight / 16.0));
    CHECK(ideal.avg_bits_per_weight <= rans.avg_bits_per_weight);
    CHECK(rans.avg_bits_per_weight <= tans.avg_bits_per_weight);
    if (nb > 6) {
      const double delta = ideal.avg_bits_per_weight - prev;
      CHECK(delta >= 0.95);
      CHECK(delta <= 1.05);
    }
    prev = ideal.avg_bits_per_weight;
  }
}

TEST_CASE("quant report: strictly increasing in N_b") {
  auto& g = test::rng();
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> w(5'000);
  for (auto& x : w) x = u(g);
  double prev = -1;
  for (unsigned nb = 1; nb <= 15; ++nb) {
    const auto r = quant_report(quantize_linear(w, {nb}).values, SizeEstimate::Ideal);
    CHECK(r.avg_bits_per_weight > prev);
    prev = r.avg_bits_per_weight;
  }
}

TEST_CASE("quant report: constant tensor costs only payload") {
  const std::vector<std::int32_t> q(1000, 5);
  const auto r = quant_report(q, SizeEstimate::Ideal);
  CHECK(r.avg_code_bits == doctest::Approx(0.0));
  CHECK(r.avg_bits_per_weight == doctest::Approx(3.0));
}
